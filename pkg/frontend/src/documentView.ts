/** Document viewer state: colored mention overlays, a bottom panel grouping
 * entities by type with occurrence counts, and cyclic occurrence stepping.
 *
 * Overlay offsets come straight from the server's mention list; this module
 * never re-runs extraction or shifts spans.
 */

import { colorForLabel } from "./colors.js";
import type { Mention } from "./types.js";

export interface Overlay {
  start: number;
  end: number;
  label: string;
  color: string;
  node: string;
  nodeLabel: string;
  surface: string;
  edge: string;
}

export interface EntityChip {
  node: string;
  nodeLabel: string;
  label: string;
  color: string;
  count: number;
}

export interface TypeGroup {
  label: string;
  color: string;
  entities: EntityChip[];
}

export class DocumentViewState {
  readonly overlays: Overlay[];
  /** bottom panel: entities grouped by label, each group sorted by count desc */
  readonly groups: TypeGroup[];
  private cursorByEntity = new Map<string, number>();

  constructor(
    readonly documentId: string,
    readonly text: string,
    mentions: Mention[],
  ) {
    this.overlays = mentions
      .map((m) => ({
        start: m.start,
        end: m.end,
        label: m.label,
        color: colorForLabel(m.label),
        node: m.node,
        nodeLabel: m.node_label,
        surface: m.surface,
        edge: m.edge,
      }))
      .sort((a, b) => a.start - b.start || a.end - b.end);

    const byEntity = new Map<string, EntityChip>();
    for (const overlay of this.overlays) {
      const chip = byEntity.get(overlay.node);
      if (chip) chip.count += 1;
      else
        byEntity.set(overlay.node, {
          node: overlay.node,
          nodeLabel: overlay.nodeLabel,
          label: overlay.label,
          color: overlay.color,
          count: 1,
        });
    }
    const byLabel = new Map<string, EntityChip[]>();
    for (const chip of byEntity.values()) {
      const bucket = byLabel.get(chip.label) ?? [];
      bucket.push(chip);
      byLabel.set(chip.label, bucket);
    }
    this.groups = [...byLabel.entries()]
      .map(([label, entities]) => ({
        label,
        color: colorForLabel(label),
        entities: entities.sort((a, b) => b.count - a.count || a.nodeLabel.localeCompare(b.nodeLabel)),
      }))
      .sort((a, b) => b.entities.reduce((s, e) => s + e.count, 0) - a.entities.reduce((s, e) => s + e.count, 0) || a.label.localeCompare(b.label));
  }

  occurrences(nodeId: string): Overlay[] {
    return this.overlays.filter((o) => o.node === nodeId);
  }

  currentOccurrence(nodeId: string): Overlay {
    const spans = this.occurrences(nodeId);
    if (spans.length === 0) throw new Error(`entity ${nodeId} has no mention in ${this.documentId}`);
    const cursor = this.cursorByEntity.get(nodeId) ?? 0;
    return spans[cursor]!;
  }

  /** Step the per-entity cursor cyclically and return the new occurrence. */
  step(nodeId: string, direction: 1 | -1 = 1): Overlay {
    const spans = this.occurrences(nodeId);
    if (spans.length === 0) throw new Error(`entity ${nodeId} has no mention in ${this.documentId}`);
    const cursor = this.cursorByEntity.get(nodeId) ?? 0;
    const next = (cursor + direction + spans.length) % spans.length;
    this.cursorByEntity.set(nodeId, next);
    return spans[next]!;
  }

  /** Clicking a bottom-panel chip (or a graph node) jumps to the first mention. */
  jumpTo(nodeId: string): Overlay {
    const spans = this.occurrences(nodeId);
    if (spans.length === 0) throw new Error(`entity ${nodeId} has no mention in ${this.documentId}`);
    this.cursorByEntity.set(nodeId, 0);
    return spans[0]!;
  }
}
