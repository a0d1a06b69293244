/** HTML renderers over the view models. Pure string templates so they stay
 * testable without a DOM; main.ts assigns the results to innerHTML. */

import type { FacetGroupView, ResultRowView } from "./search.js";
import type { TextSegment } from "./review.js";
import type { CardView, GrowthBarView, HeatmapView, TrendingView } from "./dashboard.js";
import type { QueueItem } from "./types.js";

export function escapeHtml(raw: string): string {
  return raw
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

const FACET_LABELS: Record<string, string> = {
  topic: "Topics",
  variant: "Variants",
  vaccine: "Vaccines",
  drug: "Drugs",
  journal: "Journals",
};

export function renderFacetSidebar(groups: FacetGroupView[]): string {
  const sections = groups.map((group) => {
    const rows = group.entries
      .map(
        (entry) => `
      <label class="facet-row${entry.selected ? " selected" : ""}">
        <input type="checkbox" data-facet="${group.facet}" data-value="${escapeHtml(entry.value)}"
               ${entry.selected ? "checked" : ""}>
        <span class="facet-value">${escapeHtml(entry.value)}</span>
        <span class="facet-count">${entry.count}</span>
      </label>`,
      )
      .join("");
    return `
    <fieldset class="facet-group">
      <legend>${FACET_LABELS[group.facet] ?? group.facet}</legend>
      ${rows || '<p class="facet-empty">none</p>'}
    </fieldset>`;
  });
  return sections.join("") + '<button id="clear-filters">Clear all filters</button>';
}

export function renderResultRows(rows: ResultRowView[]): string {
  if (!rows.length) return '<p class="empty">No matching articles.</p>';
  return rows
    .map((row) => {
      const chips = row.topics
        .map((topic) => `<span class="chip">${escapeHtml(topic)}</span>`)
        .join("");
      const badge = row.provisionalLongCovid
        ? '<span class="badge-provisional" title="auto-included, pending curator review">provisional Long COVID</span>'
        : "";
      return `
      <article class="result" data-pmid="${row.pmid}">
        <h3>${escapeHtml(row.title)} ${badge}</h3>
        <p class="meta">PMID ${row.pmid} &middot; ${escapeHtml(row.journal)} &middot; ${row.pubDate}</p>
        <p class="chips">${chips}</p>
        <p class="actions">
          <button class="cite" data-pmid="${row.pmid}" data-style="text">Cite</button>
          <button class="cite" data-pmid="${row.pmid}" data-style="ris">RIS</button>
          <button class="share" data-pmid="${row.pmid}">Share</button>
        </p>
      </article>`;
    })
    .join("");
}

export function renderSegments(segments: TextSegment[]): string {
  return segments
    .map((segment) =>
      segment.highlight
        ? `<mark>${escapeHtml(segment.text)}</mark>`
        : escapeHtml(segment.text),
    )
    .join("");
}

export function renderQueueItem(
  item: QueueItem,
  titleHtml: string,
  abstractHtml: string,
): string {
  const signals = Object.entries(item.signals)
    .map(([name, value]) => `<tr><td>${name}</td><td>${value.toFixed(3)}</td></tr>`)
    .join("");
  return `
  <article class="queue-item" data-pmid="${item.pmid}">
    <h3>${titleHtml}</h3>
    <p class="meta">PMID ${item.pmid} &middot; ${escapeHtml(item.journal)} &middot; ${item.pub_date}
      &middot; p=${item.p.toFixed(3)} &middot; priority=${item.priority.toFixed(3)}</p>
    <p class="abstract">${abstractHtml}</p>
    <table class="signals"><tbody>${signals}</tbody></table>
    <p class="actions">
      <button class="accept" data-pmid="${item.pmid}">Accept</button>
      <button class="reject" data-pmid="${item.pmid}">Reject</button>
    </p>
  </article>`;
}

export function renderOverview(cards: CardView[]): string {
  return cards
    .map(
      (card) => `
    <div class="card"><div class="card-value">${card.value}</div>
    <div class="card-label">${escapeHtml(card.label)}</div></div>`,
    )
    .join("");
}

export function renderGrowthBars(bars: GrowthBarView[]): string {
  const columns = bars
    .map(
      (bar) => `
    <div class="bar" style="height:${bar.heightPct.toFixed(1)}%"
         data-period="${bar.period}" data-count="${bar.count}"
         title="${bar.period}: ${bar.count} new, ${bar.cumulative} total"></div>`,
    )
    .join("");
  return `<div class="bars">${columns}</div>`;
}

export function renderHeatmap(view: HeatmapView): string {
  const header = view.topics
    .map((topic) => `<th title="${escapeHtml(topic)}">${escapeHtml(topic.slice(0, 4))}</th>`)
    .join("");
  const rows = view.topics
    .map((rowTopic, i) => {
      const cells = view.cells
        .filter((cell) => cell.row === rowTopic)
        .map(
          (cell) => `
        <td style="background:rgba(31,119,180,${(cell.intensity * 0.85).toFixed(2)})"
            title="${escapeHtml(cell.row)} &cap; ${escapeHtml(cell.col)}: ${cell.count}">${cell.count}</td>`,
        )
        .join("");
      return `<tr><th>${escapeHtml(rowTopic)}</th>${cells}</tr>`;
    })
    .join("");
  return `<table class="heatmap"><thead><tr><th></th>${header}</tr></thead><tbody>${rows}</tbody></table>`;
}

export function renderTrending(view: TrendingView): string {
  if (!view.visible) return "";
  const rows = view.items
    .map(
      (item) => `
    <li><span class="trend-score">${item.trendScore.toFixed(2)}</span>
    ${escapeHtml(item.title)} <span class="meta">(PMID ${item.pmid}, ${escapeHtml(item.journal)})</span></li>`,
    )
    .join("");
  return `<h2>Trending publications</h2><ol class="trending">${rows}</ol>`;
}

export function renderBanner(message: string, kind: "info" | "error"): string {
  return `<div class="banner ${kind}">${escapeHtml(message)}
    <button class="dismiss">&times;</button></div>`;
}
