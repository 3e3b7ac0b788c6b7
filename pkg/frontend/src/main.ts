/**
 * Console bootstrap.  Each captain opens a role-specific link:
 *
 *     index.html?api=http://host:8000&session=SID&team=AUS&token=TOKEN
 *
 * The page polls the session for phase changes made by the other captain;
 * the server stays authoritative for every transition.
 */

import { ApiError, SessionClient } from "./api.js";
import {
  ConsoleState,
  advantageousTurnFor,
  applyNetworkError,
  applySession,
  initialState,
} from "./state.js";
import { WhatIfDebouncer } from "./whatif.js";
import { renderFlow } from "./ui.js";

const POLL_MS = 1500;

export function startConsole(root: HTMLElement, location: Location): void {
  const params = new URLSearchParams(location.search);
  const api = params.get("api") ?? "";
  const sessionId = params.get("session") ?? "";
  const team = params.get("team") ?? "";
  const token = params.get("token") ?? "";
  if (!api || !sessionId || !team || !token) {
    root.textContent = "Missing query parameters: api, session, team, token.";
    return;
  }

  const client = new SessionClient(api, token);
  let state: ConsoleState = { ...initialState(), role: { team, token } };

  const debouncer = new WhatIfDebouncer(
    (b) => client.whatIf(sessionId, { b, a_hat: state.perceivedAdvantage }),
    (_b, result) => {
      state = { ...state, whatIf: result, whatIfError: null };
      draw();
    },
    (_b, error) => {
      state = {
        ...state,
        whatIfError: error instanceof ApiError ? error.message : "what-if query failed",
      };
      draw();
    },
  );

  const actions = {
    onToss: () => void mutate(() => client.toss(sessionId)),
    onSlide: (b: number) => {
      state = { ...state, sliderB: b };
      debouncer.update(b);
      draw();
    },
    onAdvantageChange: (aHat: number) => {
      state = { ...state, perceivedAdvantage: aHat, whatIf: null };
      debouncer.update(state.sliderB);
      draw();
    },
    onPropose: (b: number) =>
      void mutate(() => client.propose(sessionId, b, advantageousTurnFor(state.perceivedAdvantage))),
    onChoose: (option: 1 | 2) => void mutate(() => client.choose(sessionId, option)),
    onRetry: () => void refresh(),
  };

  async function mutate(call: () => Promise<import("./api.js").Session>): Promise<void> {
    try {
      state = applySession(state, await call());
    } catch (error) {
      state = applyNetworkError(state, error instanceof Error ? error.message : String(error));
    }
    draw();
  }

  async function refresh(): Promise<void> {
    try {
      state = applySession(state, await client.getSession(sessionId));
    } catch (error) {
      state = applyNetworkError(state, error instanceof Error ? error.message : String(error));
    }
    draw();
  }

  function draw(): void {
    renderFlow(root, state, actions);
  }

  void refresh();
  setInterval(() => void refresh(), POLL_MS);
}

declare global {
  interface Window {
    fairtossStart?: typeof startConsole;
  }
}

if (typeof window !== "undefined") {
  window.fairtossStart = startConsole;
  const root = document.getElementById("console-root");
  if (root) startConsole(root, window.location);
}
