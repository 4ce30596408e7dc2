// Application wiring. The server is authoritative: every mutation replaces
// the local snapshot with the response payload and re-renders, the client
// never generates narrative text itself, and a 409 raises the reload banner.

import { ApiClient, ApiError } from "./api.js";
import { GraphPanel, ParamsPanel, SearchPanel, StoryView } from "./panels.js";
import { chainTo, deepestLeaf, storyOrderTexts } from "./story.js";
import { TreeView } from "./treeView.js";
import type { GraphDoc, ProgressRecord, ProjectPayload } from "./types.js";
import { validateParams, validateSearch } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const element = document.createElement(tag);
  if (className) element.className = className;
  if (text !== undefined) element.textContent = text;
  return element;
}

export class App {
  readonly api: ApiClient;
  payload: ProjectPayload | null = null;
  selected: string | null = null;
  highlights = new Set<string>();
  activeRun: string | null = null;

  private tree: TreeView;
  private params = new ParamsPanel();
  private search: SearchPanel;
  private graph: GraphPanel;
  private story = new StoryView();
  private banner = el("div", "banner");
  private projectLabel = el("span", "project-label", "no project");
  private message = el("p", "message");

  constructor(
    private container: HTMLElement,
    baseUrl: string,
  ) {
    this.api = new ApiClient(baseUrl);

    const header = el("header");
    const newButton = el("button", "new-project", "New project");
    newButton.addEventListener("click", () => {
      const rootText = window.prompt("Opening event for the new story?");
      if (rootText) void this.newProject(rootText);
    });
    const openButton = el("button", "open-project", "Open");
    openButton.addEventListener("click", () => {
      const projectId = window.prompt("Project id?");
      if (projectId) void this.openProject(projectId);
    });
    const saveButton = el("button", "save-project", "Save");
    saveButton.addEventListener("click", () => this.downloadProject());
    header.append(newButton, openButton, saveButton, this.projectLabel);

    this.banner.style.display = "none";
    const reload = el("button", "reload-project", "Reload");
    reload.addEventListener("click", () => void this.refresh());
    this.banner.appendChild(el("span", "banner-text", "Project changed on the server."));
    this.banner.appendChild(reload);

    const canvasWrap = el("div", "canvas-wrap");
    this.tree = new TreeView(canvasWrap, { onSelect: (nodeId) => this.select(nodeId) });

    const actions = el("div", "node-actions");
    const forward = el("button", "expand-forward", "Expand forward");
    forward.addEventListener("click", () => void this.expandSelected("forward"));
    const backward = el("button", "expand-backward", "Expand backward");
    backward.addEventListener("click", () => void this.expandSelected("backward"));
    const judge = el("button", "judge-chain", "Judge chain to here");
    judge.addEventListener("click", () => void this.judgeSelected());
    const read = el("button", "read-chain", "Read chain");
    read.addEventListener("click", () => this.readChain(this.selected ?? undefined));
    actions.append(forward, backward, judge, read);

    this.search = new SearchPanel({
      onStart: () => void this.startRun(),
      onStop: () => void this.stopRun(),
      onReconnect: () => void this.followActiveRun(),
    });
    this.graph = new GraphPanel({
      onAddEntity: (label, type) => void this.addEntity(label, type),
      onAddRelationship: (source, target, type) =>
        void this.addRelationship(source, target, type),
      onGenerate: (instruction, entityTypes, relationshipTypes) =>
        void this.generateGraph(instruction, entityTypes, relationshipTypes),
    });

    const side = el("aside", "side");
    side.append(this.params.element, actions, this.search.element, this.graph.element);
    const main = el("main");
    main.append(canvasWrap, this.story.element);
    this.container.append(header, this.banner, this.message, main, side);
  }

  // -- state ------------------------------------------------------------------

  private applyPayload(payload: ProjectPayload): void {
    this.payload = payload;
    if (this.selected && !payload.project.tree.nodes.some((n) => n.id === this.selected)) {
      this.selected = payload.root_id;
    }
    if (!this.selected) this.selected = payload.root_id;
    this.projectLabel.textContent = `${payload.project_id} @ r${payload.revision}`;
    this.banner.style.display = "none";
    this.renderTree();
    this.graph.render(payload.project.graph);
  }

  private renderTree(): void {
    if (!this.payload) return;
    this.tree.render(this.payload.project.tree, this.selected, this.highlights);
  }

  private select(nodeId: string): void {
    this.selected = nodeId;
    this.renderTree();
  }

  private note(text: string): void {
    this.message.textContent = text;
  }

  private handleError(error: unknown): void {
    if (error instanceof ApiError && error.status === 409) {
      this.banner.style.display = "";
      this.note(`conflict: ${error.message}`);
      return;
    }
    this.note(error instanceof Error ? error.message : String(error));
  }

  // -- actions ----------------------------------------------------------------

  async newProject(rootText: string): Promise<void> {
    try {
      this.highlights.clear();
      this.selected = null;
      this.applyPayload(await this.api.createProject(rootText));
      this.note("project created");
    } catch (error) {
      this.handleError(error);
    }
  }

  async openProject(projectId: string): Promise<void> {
    try {
      this.highlights.clear();
      this.selected = null;
      this.applyPayload(await this.api.getProject(projectId));
      this.note("project loaded");
    } catch (error) {
      this.handleError(error);
    }
  }

  async refresh(): Promise<void> {
    if (!this.payload) return;
    try {
      this.applyPayload(await this.api.getProject(this.payload.project_id));
    } catch (error) {
      this.handleError(error);
    }
  }

  downloadProject(): void {
    if (!this.payload) return;
    const data = JSON.stringify(this.payload.project, null, 2);
    const anchor = el("a");
    anchor.href = `data:application/json;charset=utf-8,${encodeURIComponent(data)}`;
    anchor.setAttribute("download", `${this.payload.project_id}.json`);
    anchor.click();
    this.note("project downloaded");
  }

  async expandSelected(direction: "forward" | "backward"): Promise<void> {
    if (!this.payload || !this.selected) return;
    const params = this.params.read();
    const problems = validateParams(params);
    if (problems.length > 0) {
      this.note(`invalid parameters: ${problems.join("; ")}`);
      return;
    }
    try {
      const payload = await this.api.expand(
        this.payload.project_id,
        this.selected,
        this.payload.revision,
        direction,
        params,
      );
      this.applyPayload(payload);
      this.note(`expanded ${direction}: ${payload.created_node_id ?? ""}`);
    } catch (error) {
      this.handleError(error);
    }
  }

  async judgeSelected(): Promise<void> {
    if (!this.payload) return;
    const leaf = this.selected ?? deepestLeaf(this.payload.project.tree);
    try {
      const result = await this.api.judgeChain(this.payload.project_id, leaf);
      this.story.show(result.narrative.split("\n\n"), `Judged chain to ${leaf}`);
      this.story.showJudgement(result.report.judgement, result.report.narrative_comments);
    } catch (error) {
      this.handleError(error);
    }
  }

  readChain(leafId?: string): void {
    if (!this.payload) return;
    const tree = this.payload.project.tree;
    const leaf = leafId ?? deepestLeaf(tree);
    this.story.show(storyOrderTexts(tree, chainTo(tree, leaf)), `Chain to ${leaf}`);
  }

  async startRun(): Promise<void> {
    if (!this.payload) return;
    const params = this.params.read();
    const search = this.search.read();
    const problems = [...validateParams(params), ...validateSearch(search)];
    if (problems.length > 0) {
      this.search.setStatus(`invalid: ${problems.join("; ")}`);
      return;
    }
    try {
      this.search.clearLog();
      this.highlights.clear();
      const started = await this.api.startMcts(
        this.payload.project_id,
        this.payload.revision,
        search,
        params,
      );
      this.activeRun = started.run_id;
      this.search.setStatus(`running ${started.run_id}`);
      await this.followActiveRun();
    } catch (error) {
      this.handleError(error);
    }
  }

  async followActiveRun(): Promise<void> {
    if (!this.payload || !this.activeRun) return;
    this.search.showReconnect(false);
    const projectId = this.payload.project_id;
    const runId = this.activeRun;
    let finished = false;
    try {
      await this.api.followRun(projectId, runId, (record: ProgressRecord) => {
        this.search.log(record);
        if (record.phase === "backpropagated" && record.node_id) {
          this.highlights.add(record.node_id);
        }
        if (record.phase === "done") {
          finished = true;
          this.search.setStatus(`${record.status} after ${record.iterations_run} iteration(s)`);
        }
      });
    } catch (error) {
      this.handleError(error);
    }
    if (!finished) {
      // stream dropped before the terminal record: offer to re-attach
      this.search.showReconnect(true);
      this.search.setStatus("stream interrupted");
      return;
    }
    this.activeRun = null;
    await this.refresh();
  }

  async stopRun(): Promise<void> {
    if (!this.payload || !this.activeRun) return;
    try {
      await this.api.stopMcts(this.payload.project_id, this.activeRun);
      this.search.setStatus("stopping…");
    } catch (error) {
      this.handleError(error);
    }
  }

  private editedGraph(mutate: (graph: GraphDoc) => void): GraphDoc | null {
    if (!this.payload) return null;
    const copy = JSON.parse(JSON.stringify(this.payload.project.graph)) as GraphDoc;
    mutate(copy);
    return copy;
  }

  async addEntity(label: string, type: string): Promise<void> {
    if (!this.payload || !label || !type) {
      this.note("entity needs a label and a type");
      return;
    }
    const graph = this.editedGraph((g) => {
      if (!g.entity_types.includes(type)) g.entity_types.push(type);
      let n = g.entities.length + 1;
      while (g.entities.some((e) => e.id === `ui${n}`)) n += 1;
      g.entities.push({ id: `ui${n}`, label, type });
    });
    await this.putGraph(graph);
  }

  async addRelationship(source: string, target: string, type: string): Promise<void> {
    if (!this.payload || !source || !target || !type) {
      this.note("relationship needs both endpoints and a type");
      return;
    }
    if (source === target) {
      this.note("self-loops are not allowed");
      return;
    }
    const graph = this.editedGraph((g) => {
      if (!g.relationship_types.includes(type)) g.relationship_types.push(type);
      g.relationships.push({ source, target, type });
    });
    await this.putGraph(graph);
  }

  private async putGraph(graph: GraphDoc | null): Promise<void> {
    if (!this.payload || !graph) return;
    try {
      this.applyPayload(
        await this.api.putGraph(this.payload.project_id, this.payload.revision, graph),
      );
      this.note("graph updated");
    } catch (error) {
      this.handleError(error);
    }
  }

  async generateGraph(
    instruction: string,
    entityTypes: string[],
    relationshipTypes: string[],
  ): Promise<void> {
    if (!this.payload) return;
    if (!instruction || entityTypes.length === 0 || relationshipTypes.length === 0) {
      this.note("graph generation needs an instruction and both type lists");
      return;
    }
    try {
      this.applyPayload(
        await this.api.generateGraph(
          this.payload.project_id,
          this.payload.revision,
          instruction,
          entityTypes,
          relationshipTypes,
        ),
      );
      this.note("graph generated");
    } catch (error) {
      this.handleError(error);
    }
  }
}

export function createApp(container: HTMLElement, baseUrl: string): App {
  return new App(container, baseUrl);
}

declare global {
  interface Window {
    STORYSEARCH_API?: string;
  }
}

if (typeof document !== "undefined") {
  const mount = document.getElementById("app");
  if (mount) {
    createApp(mount, window.STORYSEARCH_API ?? window.location.origin);
  }
}
