/** Dashboard view models: overview cards, growth bars, co-occurrence
 * heatmap, trending list. Every displayed number is one API field. */

import type {
  CooccurrencePayload,
  GrowthPayload,
  OverviewPayload,
  TrendingPayload,
} from "./types.js";

export interface CardView {
  label: string;
  value: number;
}

export function overviewCards(payload: OverviewPayload): CardView[] {
  return [
    { label: "publications", value: payload.publications },
    { label: "journals", value: payload.journals },
    { label: "topics", value: payload.topics },
  ];
}

export interface GrowthBarView {
  period: string;
  count: number; // the period's new-article count, verbatim
  cumulative: number;
  heightPct: number; // relative to the tallest bar, for rendering only
}

export function growthBars(payload: GrowthPayload): GrowthBarView[] {
  const max = Math.max(1, ...payload.rows.map((row) => row.new));
  return payload.rows.map((row) => ({
    period: row.period,
    count: row.new,
    cumulative: row.cumulative,
    heightPct: (row.new / max) * 100,
  }));
}

export interface HeatCellView {
  row: string;
  col: string;
  count: number;
  intensity: number; // 0..1 relative to the largest off-diagonal entry
}

export interface HeatmapView {
  topics: string[];
  cells: HeatCellView[];
}

export function cooccurrenceHeatmap(payload: CooccurrencePayload): HeatmapView {
  let maxOff = 1;
  payload.matrix.forEach((row, i) =>
    row.forEach((value, j) => {
      if (i !== j && value > maxOff) maxOff = value;
    }),
  );
  const cells: HeatCellView[] = [];
  payload.topics.forEach((rowTopic, i) => {
    payload.topics.forEach((colTopic, j) => {
      const count = payload.matrix[i][j];
      cells.push({
        row: rowTopic,
        col: colTopic,
        count,
        intensity: i === j ? 1 : count / maxOff,
      });
    });
  });
  return { topics: payload.topics, cells };
}

export interface TrendingView {
  visible: boolean; // the widget hides itself when the feed is empty
  items: { pmid: number; title: string; journal: string; trendScore: number }[];
}

export function trendingList(payload: TrendingPayload): TrendingView {
  return {
    visible: payload.items.length > 0,
    items: payload.items.map((item) => ({
      pmid: item.pmid,
      title: item.title,
      journal: item.journal,
      trendScore: item.trend_score,
    })),
  };
}
