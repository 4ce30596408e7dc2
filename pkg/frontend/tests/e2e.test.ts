// End-to-end steering loop against the live mock-backed service: open a
// project, expand a node, run a 5-iteration search over the stream, and
// generate an entity graph — asserting on the rendered DOM at each step.

import { beforeEach, describe, expect, it } from "vitest";

import { createApp, type App } from "../src/app.js";

const BASE_URL = process.env.STORYSEARCH_TEST_URL!;
const ROOT_TEXT =
  "Out in the woods stood a nice little fir tree that wanted so very much to be grown up.";

function mount(): { app: App; root: HTMLElement } {
  document.body.innerHTML = "";
  const root = document.createElement("div");
  document.body.appendChild(root);
  return { app: createApp(root, BASE_URL), root };
}

function nodeElements(root: HTMLElement): Element[] {
  return [...root.querySelectorAll("[data-node-id]")];
}

function click(root: HTMLElement, selector: string): void {
  const button = root.querySelector(selector) as HTMLElement | null;
  expect(button, selector).not.toBeNull();
  button!.dispatchEvent(new MouseEvent("click", { bubbles: true }));
}

async function until(check: () => boolean, timeoutMs = 20000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (check()) return;
    await new Promise((resolve) => setTimeout(resolve, 50));
  }
  expect(check()).toBe(true);
}

describe("steering loop", () => {
  let app: App;
  let root: HTMLElement;

  beforeEach(async () => {
    ({ app, root } = mount());
    await app.newProject(ROOT_TEXT);
  });

  it("opens a project and renders the root node", () => {
    expect(app.payload).not.toBeNull();
    const rendered = nodeElements(root);
    expect(rendered).toHaveLength(1);
    expect(rendered[0].getAttribute("data-node-id")).toBe(app.payload!.root_id);
    expect(root.textContent).toContain(app.payload!.project_id);
  });

  it("expands a node and shows the new child", async () => {
    click(root, "button.expand-forward");
    await until(() => nodeElements(root).length === 2);
    const edge = root.querySelector("[data-edge-to]");
    expect(edge).not.toBeNull();
    expect(edge!.textContent).toContain("leads to");
    expect(app.payload!.revision).toBe(2);
  });

  it("runs a 5-iteration search with streamed progress and highlights", async () => {
    const iterations = root.querySelector(".search-panel input[type=number]") as HTMLInputElement;
    // inputs render in panel order: max children, iterations, ...
    const numberInputs = [...root.querySelectorAll(".search-panel input[type=number]")];
    (numberInputs[0] as HTMLInputElement).value = "2";
    (numberInputs[1] as HTMLInputElement).value = "5";
    expect(iterations).not.toBeNull();

    click(root, "button.start-run");
    await until(() => root.querySelectorAll(".run-log .log-done").length === 1);

    const backprops = root.querySelectorAll(".run-log .log-backpropagated");
    expect(backprops).toHaveLength(5);
    await until(() => nodeElements(root).length === 6);
    const highlighted = root.querySelectorAll("[data-node-id].highlight");
    expect(highlighted.length).toBeGreaterThanOrEqual(1);
    for (const element of highlighted) {
      expect(element.getAttribute("data-node-id")).not.toBe(app.payload!.root_id);
    }
    expect(root.querySelector(".run-status")!.textContent).toContain("done");
  });

  it("stops a long run before it exhausts its budget", async () => {
    const numberInputs = [...root.querySelectorAll(".search-panel input[type=number]")];
    (numberInputs[1] as HTMLInputElement).value = "500";
    click(root, "button.start-run");
    await until(() => root.querySelectorAll(".run-log li").length >= 4);
    click(root, "button.stop-run");
    await until(() => root.querySelectorAll(".run-log .log-done").length === 1);
    expect(root.querySelector(".run-status")!.textContent).toContain("stopped");
  });

  it("generates an entity graph and groups entities by type", async () => {
    const panel = root.querySelector(".graph-panel")!;
    (panel.querySelector(".generate-form textarea") as HTMLTextAreaElement).value =
      "a graph of three families in a village: the Smiths, the Jones, and the Adams";
    const typeInputs = [...panel.querySelectorAll(".generate-form input")] as HTMLInputElement[];
    typeInputs[0].value = "person, village, dog";
    typeInputs[1].value = "married_to, friends_with, has_pet, live_in, child_of, is_member_of_family";

    click(root, "button.generate-graph");
    await until(() => root.querySelectorAll(".entity-group").length === 3);

    const groupTypes = [...root.querySelectorAll(".entity-group")].map((g) =>
      g.getAttribute("data-entity-type"),
    );
    expect(groupTypes.sort()).toEqual(["dog", "person", "village"]);
    expect(root.querySelectorAll(".entity").length).toBeGreaterThanOrEqual(6);
    expect(root.querySelectorAll(".relationship").length).toBeGreaterThanOrEqual(1);
  });

  it("edits the graph manually through the entity and relationship forms", async () => {
    const panel = root.querySelector(".graph-panel")!;
    const entityInputs = [...panel.querySelectorAll(".entity-form input")] as HTMLInputElement[];
    entityInputs[0].value = "Lily";
    entityInputs[1].value = "person";
    click(root, "button.add-entity");
    await until(() => root.querySelectorAll(".entity").length === 1);

    entityInputs[0].value = "Tom";
    entityInputs[1].value = "person";
    click(root, "button.add-entity");
    await until(() => root.querySelectorAll(".entity").length === 2);

    const relType = panel.querySelector(".relationship-form input") as HTMLInputElement;
    relType.value = "married_to";
    const selects = [...panel.querySelectorAll(".relationship-form select")] as HTMLSelectElement[];
    selects[0].selectedIndex = 0;
    selects[1].selectedIndex = 1;
    click(root, "button.add-relationship");
    await until(() => root.querySelectorAll(".relationship").length === 1);
    expect(root.querySelector(".relationship")!.textContent).toContain("married_to");
  });

  it("reads a chain stub-first in the story view", async () => {
    click(root, "button.expand-forward");
    await until(() => nodeElements(root).length === 2);
    click(root, "button.read-chain");
    const events = [...root.querySelectorAll(".story-event")];
    expect(events.length).toBeGreaterThanOrEqual(1);
    expect(events[0].textContent).toBe(ROOT_TEXT);
  });

  it("judges the chain to the selected node", async () => {
    click(root, "button.expand-forward");
    await until(() => nodeElements(root).length === 2);
    click(root, "button.judge-chain");
    await until(() => root.querySelectorAll(".judge-scores li").length === 7);
    expect(root.querySelector(".story-view")!.textContent).toContain("overall_quality");
  });

  it("shows the reload banner on a stale revision", async () => {
    // sabotage the local revision to simulate another writer
    app.payload!.revision = 99;
    await app.expandSelected("forward");
    const banner = root.querySelector(".banner") as HTMLElement;
    expect(banner.style.display).not.toBe("none");
    click(root, "button.reload-project");
    await until(() => (root.querySelector(".banner") as HTMLElement).style.display === "none");
  });

  it("blocks out-of-range manual entries client-side", async () => {
    const numberInputs = [...root.querySelectorAll(".search-panel input[type=number]")];
    (numberInputs[1] as HTMLInputElement).value = "0";
    click(root, "button.start-run");
    expect(root.querySelector(".run-status")!.textContent).toContain("invalid");
    expect(root.querySelectorAll(".run-log li")).toHaveLength(0);
  });
});
