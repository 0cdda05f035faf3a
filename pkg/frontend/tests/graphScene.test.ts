import { describe, expect, it } from "vitest";

import { GraphScene, LOCAL_SIMULATION_LIMIT, shouldSimulateLocally } from "../src/graphScene.js";
import type { EdgeItem, NodeItem, Position } from "../src/types.js";

function node(id: string, label = id): NodeItem {
  return {
    id,
    type: "Thing/Entity/Person",
    label,
    attributes: {},
    hidden: false,
    hide_reason: null,
    reviewed: false,
    cascade_depth: 0,
    attributions: ["d1"],
    annotations: [{ comment: "check" }],
    created_at: 0,
  };
}

function edge(id: string, from: string, to: string): EdgeItem {
  return {
    id,
    kind: "related_to",
    from,
    to,
    grade: "C3",
    attributes: {},
    hidden: false,
    hide_reason: null,
    reviewed: false,
    attribution: "d1",
    created_at: 0,
  };
}

function scene(positions: Position[], edges: EdgeItem[] = []): GraphScene {
  const s = new GraphScene();
  s.load(positions.map((p) => node(p.id)), edges, positions);
  return s;
}

describe("GraphScene", () => {
  it("hit-tests node discs, topmost wins", () => {
    const s = scene([
      { id: "a", x: 0, y: 0 },
      { id: "b", x: 2, y: 0 },
    ]);
    expect(s.hitTest(1, 0)?.id).toBe("b"); // both contain (1,0); later-drawn wins
    expect(s.hitTest(100, 100)).toBeNull();
  });

  it("hover overlay exposes label, type, attributions, annotation count", () => {
    const s = scene([{ id: "a", x: 0, y: 0 }]);
    expect(s.hoverOverlay("a")).toEqual({
      id: "a",
      label: "a",
      type: "Thing/Entity/Person",
      attributions: ["d1"],
      annotations: 1,
    });
    expect(s.hoverOverlay("missing")).toBeNull();
  });

  it("drag pins a node against the simulation", () => {
    const s = scene([
      { id: "a", x: 0, y: 0 },
      { id: "b", x: 1, y: 0 },
    ]);
    s.dragTo("a", 40, 40);
    for (let i = 0; i < 20; i++) s.simulateStep();
    expect(s.nodes[0]!.x).toBe(40);
    expect(s.nodes[0]!.y).toBe(40);
    s.releasePin("a");
    s.simulateStep();
    expect(s.nodes[0]!.x).not.toBe(40);
  });

  it("repulsion separates unlinked nodes", () => {
    const s = scene([
      { id: "a", x: -1, y: 0 },
      { id: "b", x: 1, y: 0 },
    ]);
    const before = Math.abs(s.nodes[0]!.x - s.nodes[1]!.x);
    for (let i = 0; i < 10; i++) s.simulateStep({ charge: -30, linkStrength: 0, restLength: 30, centering: 0, stepSize: 1, velocityDecay: 0.6 });
    expect(Math.abs(s.nodes[0]!.x - s.nodes[1]!.x)).toBeGreaterThan(before);
  });

  it("springs pull linked nodes toward the rest length", () => {
    const s = scene(
      [
        { id: "a", x: 0, y: 0 },
        { id: "b", x: 200, y: 0 },
      ],
      [edge("e1", "a", "b")],
    );
    for (let i = 0; i < 200; i++) s.simulateStep();
    const dist = Math.abs(s.nodes[0]!.x - s.nodes[1]!.x);
    expect(dist).toBeLessThan(200);
  });

  it("falls back to server layout past the local limit", () => {
    expect(shouldSimulateLocally(LOCAL_SIMULATION_LIMIT)).toBe(true);
    expect(shouldSimulateLocally(LOCAL_SIMULATION_LIMIT + 1)).toBe(false);
  });
});
