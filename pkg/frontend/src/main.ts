/** Browser entry point: wires the controller to the page.
 *
 * All truth lives server-side; the only local persistence is the rater id.
 */

import { HttpRatingApi } from "./api.js";
import { renderBatch, renderTerminal } from "./render.js";
import { BatchController } from "./state.js";

const SESSION_KEY = "rating-session-id";
const RATER_KEY = "rating-rater-id";

function querySession(): string {
  const fromUrl = new URLSearchParams(window.location.search).get("session");
  if (fromUrl) {
    window.localStorage.setItem(SESSION_KEY, fromUrl);
    return fromUrl;
  }
  return window.localStorage.getItem(SESSION_KEY) ?? "";
}

function main(): void {
  const app = document.getElementById("app");
  const raterForm = document.getElementById("rater-form") as HTMLFormElement | null;
  const raterInput = document.getElementById("rater-id") as HTMLInputElement | null;
  if (!app || !raterForm || !raterInput) {
    return;
  }
  raterInput.value = window.localStorage.getItem(RATER_KEY) ?? "";

  let controller: BatchController | null = null;

  const redraw = () => {
    if (!controller) {
      return;
    }
    if (controller.phase === "rating" || controller.phase === "submitting") {
      app.innerHTML = renderBatch(
        controller.batch?.cards ?? [],
        controller.answers,
        controller.banner,
        controller.canSubmit && controller.phase === "rating",
      );
    } else {
      app.innerHTML = renderTerminal(controller.phase, controller.lastError, controller.banner);
    }
  };

  raterForm.addEventListener("submit", async (event) => {
    event.preventDefault();
    const rater = raterInput.value.trim();
    if (!rater) {
      return;
    }
    window.localStorage.setItem(RATER_KEY, rater);
    const sessionId = querySession();
    if (!sessionId) {
      app.innerHTML =
        `<div class="terminal error">No session id; open this page as /?session=&lt;id&gt;.</div>`;
      return;
    }
    controller = new BatchController(new HttpRatingApi("", sessionId), rater);
    await controller.load();
    redraw();
  });

  app.addEventListener("change", (event) => {
    const target = event.target as HTMLInputElement;
    if (!controller || !target.name?.startsWith("card-")) {
      return;
    }
    const index = Number(target.name.slice("card-".length));
    controller.answer(index, target.value === "yes");
    redraw();
  });

  app.addEventListener("click", async (event) => {
    const target = event.target as HTMLElement;
    if (!controller) {
      return;
    }
    if (target.id === "submit") {
      await controller.submit();
      redraw();
    } else if (target.id === "retry") {
      await controller.load();
      redraw();
    }
  });
}

main();
