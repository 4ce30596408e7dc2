// Control panels: expansion parameters, search configuration with the live
// run log, the entity-graph editor, and the chain reading view. Controls use
// bounded inputs; manual entry is re-validated before any request is sent.

import type {
  EntityDoc,
  ExpansionParams,
  GraphDoc,
  ProgressRecord,
  SearchSettings,
} from "./types.js";
import { DEFAULT_PARAMS, DEFAULT_SEARCH } from "./types.js";

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

function labeled(labelText: string, input: HTMLElement): HTMLLabelElement {
  const label = el("label");
  label.appendChild(el("span", "field-name", labelText));
  label.appendChild(input);
  return label;
}

function slider(min: number, max: number, step: number, value: number): HTMLInputElement {
  const input = el("input");
  input.type = "range";
  input.min = String(min);
  input.max = String(max);
  input.step = String(step);
  input.value = String(value);
  return input;
}

function numberInput(value: number | null, min: number): HTMLInputElement {
  const input = el("input");
  input.type = "number";
  input.min = String(min);
  if (value !== null) input.value = String(value);
  return input;
}

export class ParamsPanel {
  readonly element: HTMLElement;
  private guide = el("textarea");
  private likelihood = slider(1, 5, 1, DEFAULT_PARAMS.likelihood);
  private severity = slider(1, 5, 1, DEFAULT_PARAMS.severity);
  private temperature = slider(0, 2, 0.1, DEFAULT_PARAMS.temperature);
  private useGraph = el("input");

  constructor() {
    this.guide.placeholder = "Guide prompt (optional), e.g. Adopt a humorous tone.";
    this.useGraph.type = "checkbox";
    this.element = el("section", "panel params-panel");
    this.element.appendChild(el("h3", undefined, "Expansion parameters"));
    this.element.appendChild(labeled("Guide prompt", this.guide));
    this.element.appendChild(labeled("Likelihood (1-5)", this.likelihood));
    this.element.appendChild(labeled("Severity (1-5)", this.severity));
    this.element.appendChild(labeled("Temperature (0-2)", this.temperature));
    this.element.appendChild(labeled("Ground in entity graph", this.useGraph));
  }

  read(): ExpansionParams {
    return {
      guide_prompt: this.guide.value.trim() ? this.guide.value.trim() : null,
      likelihood: Number(this.likelihood.value),
      severity: Number(this.severity.value),
      temperature: Number(this.temperature.value),
      use_entity_graph: this.useGraph.checked,
    };
  }
}

export interface SearchPanelOptions {
  onStart: () => void;
  onStop: () => void;
  onReconnect: () => void;
}

export class SearchPanel {
  readonly element: HTMLElement;
  private prompt = el("textarea");
  private maxChildren = numberInput(DEFAULT_SEARCH.max_children, 1);
  private iterations = numberInput(DEFAULT_SEARCH.iterations, 1);
  private scoringDepth = numberInput(DEFAULT_SEARCH.scoring_depth, 0);
  private rolloutDepth = numberInput(DEFAULT_SEARCH.rollout_depth, 0);
  private desiredLength = numberInput(null, 1);
  private minChains = numberInput(null, 1);
  private status = el("p", "run-status", "idle");
  private logList = el("ul", "run-log");
  private reconnect = el("button", "reconnect", "Reconnect stream");

  constructor(options: SearchPanelOptions) {
    this.prompt.value = DEFAULT_SEARCH.scoring_prompt;
    this.element = el("section", "panel search-panel");
    this.element.appendChild(el("h3", undefined, "Branch discovery (MCTS)"));
    this.element.appendChild(labeled("Scoring prompt", this.prompt));
    this.element.appendChild(labeled("Max children per node", this.maxChildren));
    this.element.appendChild(labeled("Iterations", this.iterations));
    this.element.appendChild(labeled("Scoring depth", this.scoringDepth));
    this.element.appendChild(labeled("Rollout depth", this.rolloutDepth));
    this.element.appendChild(labeled("Early stop: chain length", this.desiredLength));
    this.element.appendChild(labeled("Early stop: min chains", this.minChains));

    const start = el("button", "start-run", "Start run");
    start.addEventListener("click", options.onStart);
    const stop = el("button", "stop-run", "Stop");
    stop.addEventListener("click", options.onStop);
    this.reconnect.style.display = "none";
    this.reconnect.addEventListener("click", options.onReconnect);
    const row = el("div", "button-row");
    row.append(start, stop, this.reconnect);
    this.element.appendChild(row);
    this.element.appendChild(this.status);
    this.element.appendChild(this.logList);
  }

  read(): SearchSettings {
    const optional = (input: HTMLInputElement) =>
      input.value.trim() === "" ? null : Number(input.value);
    return {
      scoring_prompt: this.prompt.value,
      max_children: Number(this.maxChildren.value),
      iterations: Number(this.iterations.value),
      scoring_depth: Number(this.scoringDepth.value),
      rollout_depth: Number(this.rolloutDepth.value),
      desired_chain_length: optional(this.desiredLength),
      min_num_chains: optional(this.minChains),
    };
  }

  setStatus(text: string): void {
    this.status.textContent = text;
  }

  clearLog(): void {
    this.logList.textContent = "";
    this.showReconnect(false);
  }

  log(record: ProgressRecord): void {
    const item = el("li", `log-${record.phase}`);
    const bits = [record.phase];
    if (record.iteration !== undefined) bits.unshift(`#${record.iteration}`);
    if (record.node_id) bits.push(record.node_id);
    if (record.raw_score !== undefined) bits.push(`score ${record.raw_score}`);
    if (record.status) bits.push(record.status);
    item.textContent = bits.join(" ");
    this.logList.appendChild(item);
  }

  showReconnect(visible: boolean): void {
    this.reconnect.style.display = visible ? "" : "none";
  }
}

export interface GraphPanelOptions {
  onAddEntity: (label: string, type: string) => void;
  onAddRelationship: (source: string, target: string, type: string) => void;
  onGenerate: (instruction: string, entityTypes: string[], relationshipTypes: string[]) => void;
}

export class GraphPanel {
  readonly element: HTMLElement;
  private listing = el("div", "graph-listing");
  private entityLabel = el("input");
  private entityType = el("input");
  private relSource = el("select");
  private relTarget = el("select");
  private relType = el("input");
  private instruction = el("textarea");
  private entityTypes = el("input");
  private relationshipTypes = el("input");

  constructor(options: GraphPanelOptions) {
    this.element = el("section", "panel graph-panel");
    this.element.appendChild(el("h3", undefined, "Entity graph"));
    this.element.appendChild(this.listing);

    const addEntity = el("button", "add-entity", "Add entity");
    addEntity.addEventListener("click", () =>
      options.onAddEntity(this.entityLabel.value.trim(), this.entityType.value.trim()),
    );
    const entityForm = el("div", "form-row entity-form");
    this.entityLabel.placeholder = "Label";
    this.entityType.placeholder = "Type (e.g. person)";
    entityForm.append(this.entityLabel, this.entityType, addEntity);
    this.element.appendChild(labeled("New entity", entityForm));

    const addRel = el("button", "add-relationship", "Link");
    addRel.addEventListener("click", () =>
      options.onAddRelationship(this.relSource.value, this.relTarget.value, this.relType.value.trim()),
    );
    const relForm = el("div", "form-row relationship-form");
    this.relType.placeholder = "Type (e.g. married_to)";
    relForm.append(this.relSource, this.relTarget, this.relType, addRel);
    this.element.appendChild(labeled("New relationship", relForm));

    this.instruction.placeholder = "e.g. a graph of three families in a village";
    this.entityTypes.placeholder = "entity types, comma-separated";
    this.relationshipTypes.placeholder = "relationship types, comma-separated";
    const generate = el("button", "generate-graph", "Generate from instruction");
    generate.addEventListener("click", () =>
      options.onGenerate(
        this.instruction.value.trim(),
        splitCsv(this.entityTypes.value),
        splitCsv(this.relationshipTypes.value),
      ),
    );
    const generateForm = el("div", "generate-form");
    generateForm.append(
      labeled("Instruction", this.instruction),
      labeled("Entity types", this.entityTypes),
      labeled("Relationship types", this.relationshipTypes),
      generate,
    );
    this.element.appendChild(generateForm);
  }

  render(graph: GraphDoc): void {
    this.listing.textContent = "";
    const byType = new Map<string, EntityDoc[]>();
    for (const entity of graph.entities) {
      const bucket = byType.get(entity.type) ?? [];
      bucket.push(entity);
      byType.set(entity.type, bucket);
    }
    for (const [type, entities] of [...byType.entries()].sort()) {
      const group = el("div", "entity-group");
      group.setAttribute("data-entity-type", type);
      group.appendChild(el("h4", undefined, type));
      const list = el("ul");
      for (const entity of entities.slice().sort((a, b) => a.label.localeCompare(b.label))) {
        const item = el("li", "entity", entity.label);
        item.setAttribute("data-entity-id", entity.id);
        list.appendChild(item);
      }
      group.appendChild(list);
      this.listing.appendChild(group);
    }
    if (graph.relationships.length > 0) {
      const relations = el("ul", "relationship-list");
      const labels = new Map(graph.entities.map((e) => [e.id, e.label]));
      for (const rel of graph.relationships) {
        relations.appendChild(
          el(
            "li",
            "relationship",
            `${labels.get(rel.source) ?? rel.source} —${rel.type}→ ${labels.get(rel.target) ?? rel.target}`,
          ),
        );
      }
      this.listing.appendChild(relations);
    }

    for (const select of [this.relSource, this.relTarget]) {
      select.textContent = "";
      for (const entity of graph.entities) {
        const option = el("option", undefined, entity.label);
        option.value = entity.id;
        select.appendChild(option);
      }
    }
  }
}

export class StoryView {
  readonly element: HTMLElement;
  private body = el("div", "story-body");
  private title = el("h3", undefined, "Story");

  constructor() {
    this.element = el("section", "panel story-view");
    this.element.appendChild(this.title);
    this.element.appendChild(this.body);
  }

  show(texts: string[], heading = "Story"): void {
    this.title.textContent = heading;
    this.body.textContent = "";
    for (const text of texts) {
      this.body.appendChild(el("p", "story-event", text));
    }
  }

  showJudgement(scores: Record<string, number>, comments: string): void {
    const list = el("ul", "judge-scores");
    for (const [key, value] of Object.entries(scores)) {
      list.appendChild(el("li", undefined, `${key}: ${value}`));
    }
    this.body.appendChild(list);
    this.body.appendChild(el("p", "judge-comments", comments));
  }
}

function splitCsv(value: string): string[] {
  return value
    .split(",")
    .map((part) => part.trim())
    .filter((part) => part.length > 0);
}
