/** Browser session: self-asserted curator id and snapshot-change detection. */

export interface KeyValueStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

const CURATOR_KEY = "lithub.curator";

export class UiSession {
  snapshotId: string | null = null;

  constructor(private readonly storage: KeyValueStore) {}

  get curator(): string {
    return this.storage.getItem(CURATOR_KEY) ?? "";
  }

  set curator(id: string) {
    this.storage.setItem(CURATOR_KEY, id);
  }

  /** True when a new snapshot replaced the one this session was reading. */
  observeSnapshot(id: string): boolean {
    const changed = this.snapshotId !== null && this.snapshotId !== id;
    this.snapshotId = id;
    return changed;
  }
}
