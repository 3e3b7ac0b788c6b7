import { describe, expect, test } from "vitest";

import type { PhaseName, Session, WhatIfResponse } from "../src/api.js";
import {
  activeStep,
  advantageousTurnFor,
  applyNetworkError,
  applySession,
  canChoose,
  canPropose,
  canToss,
  canWhatIf,
  initialState,
  legalActions,
  optionCards,
  whatIfBars,
} from "../src/state.js";

function sessionAt(phase: PhaseName, lucky = "AUS"): Session {
  const unlucky = lucky === "AUS" ? "NZL" : "AUS";
  const toss = phase === "created" ? null : { lucky, unlucky, coin_draw: 0 as const, seed_trace: "seed:7" };
  const proposal =
    phase === "proposed" || phase === "complete"
      ? {
          b: 50,
          b_raw: 50,
          advantageous_turn: "bowl_first" as const,
          option1: { turn: "bowl_first" as const, bonus_delta: -50 },
          option2: { turn: "bat_first" as const, bonus_delta: 50 },
        }
      : null;
  const allocation =
    phase === "complete"
      ? {
          chooser: lucky,
          other: unlucky,
          chosen: { turn: "bowl_first" as const, bonus_delta: -50 },
          complement: { turn: "bat_first" as const, bonus_delta: 50 },
          bonus_recipient: unlucky,
          bonus_runs: 50,
        }
      : null;
  return {
    id: "s1",
    teams: ["AUS", "NZL"],
    phase,
    toss,
    proposal,
    allocation,
    events: [],
    valuation_defaults: null,
    created_at: "t0",
    updated_at: "t1",
  };
}

function stateFor(phase: PhaseName, team: string, lucky = "AUS") {
  return applySession(
    { ...initialState(), role: { team, token: "tok" } },
    sessionAt(phase, lucky),
  );
}

describe("affordance guards mirror the service's phase/role rules", () => {
  const phases: PhaseName[] = ["created", "tossed", "proposed", "complete"];

  test("guards allow exactly the server-legal action set", () => {
    for (const phase of phases) {
      for (const team of ["AUS", "NZL"]) {
        const lucky = "AUS";
        const state = stateFor(phase, team, lucky);
        // Server legality: toss in created (either captain); proposal in
        // tossed by the unlucky side; choice in proposed by the lucky side.
        expect(canToss(state)).toBe(phase === "created");
        expect(canPropose(state)).toBe(phase === "tossed" && team !== lucky);
        expect(canChoose(state)).toBe(phase === "proposed" && team === lucky);
        expect(canWhatIf(state)).toBe(phase !== "created");
      }
    }
  });

  test("no action is legal without a role token", () => {
    const state = applySession(initialState(), sessionAt("tossed"));
    expect(legalActions(state)).toEqual({ toss: false, propose: false, choose: false, whatIf: false });
  });

  test("exactly one active step per phase", () => {
    expect(activeStep(null)).toBe("toss");
    expect(activeStep(sessionAt("created"))).toBe("toss");
    expect(activeStep(sessionAt("tossed"))).toBe("propose");
    expect(activeStep(sessionAt("proposed"))).toBe("choose");
    expect(activeStep(sessionAt("complete"))).toBe("complete");
  });
});

describe("network failures are retryable and non-destructive", () => {
  test("error banner state keeps the session snapshot intact", () => {
    const healthy = stateFor("proposed", "AUS");
    const failed = applyNetworkError(healthy, "fetch failed");
    expect(failed.networkError).toBe("fetch failed");
    expect(failed.session).toEqual(healthy.session);
    expect(legalActions(failed)).toEqual(legalActions(healthy));
  });
});

describe("option cards", () => {
  test("both bundles displayed verbatim once proposed", () => {
    const state = stateFor("proposed", "AUS");
    const cards = optionCards(state, false);
    expect(cards).toHaveLength(2);
    expect(cards[0]).toMatchObject({ option: 1, turn: "bowl_first", bonusDelta: -50, utility: null });
    expect(cards[1]).toMatchObject({ option: 2, turn: "bat_first", bonusDelta: 50, utility: null });
  });

  test("utilities hidden by default, shown only with a matching private what-if", () => {
    const whatIf: WhatIfResponse = {
      candidate_b: 50,
      option1_utility: 0.5,
      option2_utility: 0.5,
      indifference_bonus: 50,
      advantageous_turn: "bowl_first",
    };
    const base = stateFor("proposed", "NZL");
    const withResult = { ...base, whatIf };
    expect(optionCards(withResult, false).every((card) => card.utility === null)).toBe(true);
    const shown = optionCards(withResult, true);
    expect(shown[0]?.utility).toBe(0.5);
    expect(shown[1]?.utility).toBe(0.5);
    // Stale what-if for a different b is never displayed on the cards.
    const stale = { ...base, whatIf: { ...whatIf, candidate_b: 20 } };
    expect(optionCards(stale, true).every((card) => card.utility === null)).toBe(true);
  });

  test("chosen card marked after completion", () => {
    const cards = optionCards(stateFor("complete", "AUS"), false);
    expect(cards[0]?.chosen).toBe(true);
    expect(cards[1]?.chosen).toBe(false);
  });
});

describe("what-if display", () => {
  test("equal bars exactly at the indifference bonus", () => {
    const bars = whatIfBars({
      candidate_b: 50,
      option1_utility: 0.5,
      option2_utility: 0.5,
      indifference_bonus: 50,
      advantageous_turn: "bowl_first",
    });
    expect(bars.equal).toBe(true);
    expect(bars.crossingB).toBe(50);
  });

  test("unequal bars reflect the raw advantage at b = 0", () => {
    const bars = whatIfBars({
      candidate_b: 0,
      option1_utility: 0.84,
      option2_utility: 0.16,
      indifference_bonus: 50,
      advantageous_turn: "bowl_first",
    });
    expect(bars.equal).toBe(false);
    expect(bars.option1).toBeGreaterThan(bars.option2);
  });
});

test("advantage sign picks the declared turn", () => {
  expect(advantageousTurnFor(-50)).toBe("bowl_first");
  expect(advantageousTurnFor(50)).toBe("bat_first");
  expect(advantageousTurnFor(0)).toBe("bat_first");
});
