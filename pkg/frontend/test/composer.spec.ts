import { describe, expect, it } from "vitest";

import { ActionComposer } from "../src/composer";
import { buildPredicate } from "../src/app";
import { bucketLabels } from "../src/render";
import { fixtures } from "./fixture-server";

const ACTIONS = fixtures.actions.actions as Record<string, number[]>[];

describe("ActionComposer", () => {
  it("derives cell bounds from the admissible action list", () => {
    const composer = new ActionComposer();
    composer.setBounds(ACTIONS);
    const cells = composer.allCells();
    // Initial fixture state: nobody travelling, so only the f-bucket opens.
    expect(cells.map((c) => [c.parfactor, c.bucket, c.max])).toEqual([
      ["f1", 0, 3],
      ["f1", 1, 0],
    ]);
  });

  it("clamps values into bounds and never emits an out-of-bounds action", () => {
    const composer = new ActionComposer();
    composer.setBounds(ACTIONS);
    expect(composer.setValue("f1", 0, 99)).toBe(3);
    expect(composer.setValue("f1", 0, -5)).toBe(0);
    expect(composer.setValue("f1", 0, 2)).toBe(2);
    expect(composer.isValid()).toBe(true);
    expect(composer.toAction()).toEqual({ f1: [2, 0] });
  });

  it("loads a selected result row, clamped to current bounds", () => {
    const composer = new ActionComposer();
    composer.setBounds(ACTIONS);
    composer.load({ f1: [1, 0] });
    expect(composer.toAction()).toEqual({ f1: [1, 0] });
    composer.load({ f1: [9, 9] });
    expect(composer.toAction()).toEqual({ f1: [3, 0] });
  });

  it("resets to the zero action", () => {
    const composer = new ActionComposer();
    composer.setBounds(ACTIONS);
    composer.setValue("f1", 0, 3);
    composer.reset();
    expect(composer.toAction()).toEqual({ f1: [0, 0] });
  });
});

describe("predicate builder", () => {
  it("emits the service grammar", () => {
    expect(buildPredicate("Sick", "false", ">=", "half")).toBe(
      "count(Sick,false) >= half",
    );
    expect(buildPredicate("Travel", "true", "<=", "2")).toBe(
      "count(Travel,true) <= 2",
    );
    expect(buildPredicate("", "false", ">=", "half")).toBeNull();
  });
});

describe("bucket labels", () => {
  it("uses binary counting with f before t", () => {
    expect(bucketLabels(2)).toEqual(["f", "t"]);
    expect(bucketLabels(4)).toEqual(["ff", "ft", "tf", "tt"]);
  });
});
