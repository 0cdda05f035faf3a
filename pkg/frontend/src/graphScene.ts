/** Canvas-facing scene model: node positions, hit testing, hover overlays,
 * drag pinning, and a small local force simulation for modest views.
 *
 * Rendering itself is delegated to whatever draws the scene; this module owns
 * only the geometry and interaction state, so it is fully testable headless.
 */

import type { EdgeItem, NodeItem, Position } from "./types.js";

export const LOCAL_SIMULATION_LIMIT = 2000;

export interface SceneNode {
  id: string;
  label: string;
  type: string;
  x: number;
  y: number;
  vx: number;
  vy: number;
  /** pinned position from a drag; the simulation respects it */
  fx: number | null;
  fy: number | null;
  radius: number;
}

export interface HoverOverlay {
  id: string;
  label: string;
  type: string;
  attributions: string[];
  annotations: number;
}

export interface SimulationParams {
  charge: number;
  linkStrength: number;
  restLength: number;
  centering: number;
  stepSize: number;
  velocityDecay: number;
}

export const DEFAULT_SIMULATION: SimulationParams = {
  charge: -30,
  linkStrength: 0.1,
  restLength: 30,
  centering: 0.05,
  stepSize: 1,
  velocityDecay: 0.6,
};

/** Views small enough to animate locally; larger ones use server layout. */
export function shouldSimulateLocally(nodeCount: number): boolean {
  return nodeCount <= LOCAL_SIMULATION_LIMIT;
}

export class GraphScene {
  readonly nodes: SceneNode[] = [];
  readonly links: [number, number][] = [];
  private byId = new Map<string, number>();
  private nodeItems = new Map<string, NodeItem>();

  load(nodes: NodeItem[], edges: EdgeItem[], positions: Position[]): void {
    this.nodes.length = 0;
    this.links.length = 0;
    this.byId.clear();
    this.nodeItems.clear();
    const posById = new Map(positions.map((p) => [p.id, p]));
    for (const node of nodes) {
      const position = posById.get(node.id);
      this.byId.set(node.id, this.nodes.length);
      this.nodeItems.set(node.id, node);
      this.nodes.push({
        id: node.id,
        label: node.label,
        type: node.type,
        x: position?.x ?? 0,
        y: position?.y ?? 0,
        vx: 0,
        vy: 0,
        fx: null,
        fy: null,
        radius: 6,
      });
    }
    for (const edge of edges) {
      const a = this.byId.get(edge.from);
      const b = this.byId.get(edge.to);
      if (a !== undefined && b !== undefined) this.links.push([a, b]);
    }
  }

  /** Topmost node whose disc contains (x, y), or null. */
  hitTest(x: number, y: number): SceneNode | null {
    for (let i = this.nodes.length - 1; i >= 0; i--) {
      const node = this.nodes[i]!;
      const dx = node.x - x;
      const dy = node.y - y;
      if (dx * dx + dy * dy <= node.radius * node.radius) return node;
    }
    return null;
  }

  hoverOverlay(nodeId: string): HoverOverlay | null {
    const item = this.nodeItems.get(nodeId);
    if (!item) return null;
    return {
      id: item.id,
      label: item.label,
      type: item.type,
      attributions: item.attributions,
      annotations: item.annotations.length,
    };
  }

  /** Dragging pins the node; the simulation keeps it where the analyst put it. */
  dragTo(nodeId: string, x: number, y: number): void {
    const index = this.byId.get(nodeId);
    if (index === undefined) return;
    const node = this.nodes[index]!;
    node.x = x;
    node.y = y;
    node.fx = x;
    node.fy = y;
    node.vx = 0;
    node.vy = 0;
  }

  releasePin(nodeId: string): void {
    const index = this.byId.get(nodeId);
    if (index === undefined) return;
    this.nodes[index]!.fx = null;
    this.nodes[index]!.fy = null;
  }

  /** One local force step: pairwise repulsion, springs on links, centering. */
  simulateStep(params: SimulationParams = DEFAULT_SIMULATION): void {
    const n = this.nodes.length;
    const fx = new Float64Array(n);
    const fy = new Float64Array(n);
    for (let i = 0; i < n; i++) {
      for (let j = i + 1; j < n; j++) {
        const a = this.nodes[i]!;
        const b = this.nodes[j]!;
        const dx = a.x - b.x;
        const dy = a.y - b.y;
        const d2 = dx * dx + dy * dy + 1e-6;
        const w = -params.charge / (d2 * Math.sqrt(d2));
        fx[i] = fx[i]! + dx * w;
        fy[i] = fy[i]! + dy * w;
        fx[j] = fx[j]! - dx * w;
        fy[j] = fy[j]! - dy * w;
      }
    }
    for (const [i, j] of this.links) {
      const a = this.nodes[i]!;
      const b = this.nodes[j]!;
      const dx = b.x - a.x;
      const dy = b.y - a.y;
      const dist = Math.sqrt(dx * dx + dy * dy) || 1e-6;
      const pull = params.linkStrength * (dist - params.restLength);
      fx[i] = fx[i]! + (dx / dist) * pull;
      fy[i] = fy[i]! + (dy / dist) * pull;
      fx[j] = fx[j]! - (dx / dist) * pull;
      fy[j] = fy[j]! - (dy / dist) * pull;
    }
    for (let i = 0; i < n; i++) {
      const node = this.nodes[i]!;
      if (node.fx !== null && node.fy !== null) {
        node.x = node.fx;
        node.y = node.fy;
        node.vx = 0;
        node.vy = 0;
        continue;
      }
      fx[i] = fx[i]! - params.centering * node.x;
      fy[i] = fy[i]! - params.centering * node.y;
      node.vx = (node.vx + fx[i]! * params.stepSize) * params.velocityDecay;
      node.vy = (node.vy + fy[i]! * params.stepSize) * params.velocityDecay;
      node.x += node.vx * params.stepSize;
      node.y += node.vy * params.stepSize;
    }
  }
}
