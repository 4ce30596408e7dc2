// Shapes of the /api/v1 documents, plus client-side range validation.

export interface NodeDoc {
  id: string;
  text: string;
  direction: "root" | "forward" | "backward";
  parent_id: string | null;
  children: string[];
  seq: number;
  prior_guesses: string[];
}

export interface TreeDoc {
  root_id: string;
  nodes: NodeDoc[];
}

export interface EntityDoc {
  id: string;
  label: string;
  type: string;
}

export interface RelationshipDoc {
  source: string;
  target: string;
  type: string;
}

export interface GraphDoc {
  entity_types: string[];
  relationship_types: string[];
  entities: EntityDoc[];
  relationships: RelationshipDoc[];
}

export interface ProjectDoc {
  version: number;
  tree: TreeDoc;
  graph: GraphDoc;
  settings: Record<string, unknown>;
}

export interface ProjectPayload {
  project_id: string;
  revision: number;
  root_id: string;
  project: ProjectDoc;
  created_node_id?: string;
}

export interface ExpansionParams {
  guide_prompt: string | null;
  likelihood: number;
  severity: number;
  temperature: number;
  use_entity_graph: boolean;
}

export interface SearchSettings {
  scoring_prompt: string;
  max_children: number;
  iterations: number;
  scoring_depth: number;
  rollout_depth: number;
  desired_chain_length: number | null;
  min_num_chains: number | null;
}

export interface ProgressRecord {
  phase: string;
  iteration?: number;
  node_id?: string;
  raw_score?: number;
  status?: string;
  iterations_run?: number;
}

export interface JudgeResult {
  leaf_id: string;
  narrative: string;
  report: {
    judgement: Record<string, number>;
    narrative_comments: string;
  };
}

export const DEFAULT_PARAMS: ExpansionParams = {
  guide_prompt: null,
  likelihood: 3,
  severity: 3,
  temperature: 1.0,
  use_entity_graph: false,
};

export const DEFAULT_SEARCH: SearchSettings = {
  scoring_prompt: "Rate events from 1..10 based on interestingness.",
  max_children: 3,
  iterations: 25,
  scoring_depth: 1,
  rollout_depth: 1,
  desired_chain_length: null,
  min_num_chains: null,
};

/** Validate expansion parameters; returns human-readable problems. */
export function validateParams(params: ExpansionParams): string[] {
  const problems: string[] = [];
  if (!Number.isInteger(params.likelihood) || params.likelihood < 1 || params.likelihood > 5) {
    problems.push("likelihood must be an integer in 1..5");
  }
  if (!Number.isInteger(params.severity) || params.severity < 1 || params.severity > 5) {
    problems.push("severity must be an integer in 1..5");
  }
  if (!Number.isFinite(params.temperature) || params.temperature < 0 || params.temperature > 2) {
    problems.push("temperature must be in 0..2");
  }
  return problems;
}

/** Validate search settings; returns human-readable problems. */
export function validateSearch(search: SearchSettings): string[] {
  const problems: string[] = [];
  const positive: Array<[string, number]> = [
    ["max children", search.max_children],
    ["iterations", search.iterations],
  ];
  for (const [label, value] of positive) {
    if (!Number.isInteger(value) || value < 1) problems.push(`${label} must be an integer >= 1`);
  }
  for (const [label, value] of [
    ["scoring depth", search.scoring_depth],
    ["rollout depth", search.rollout_depth],
  ] as Array<[string, number]>) {
    if (!Number.isInteger(value) || value < 0) problems.push(`${label} must be an integer >= 0`);
  }
  if (!search.scoring_prompt.trim()) problems.push("scoring prompt must be nonempty");
  const wantLength = search.desired_chain_length !== null;
  const wantCount = search.min_num_chains !== null;
  if (wantLength !== wantCount) {
    problems.push("desired chain length and min chains must be set together");
  }
  if (wantLength && (!Number.isInteger(search.desired_chain_length) || search.desired_chain_length! < 1)) {
    problems.push("desired chain length must be an integer >= 1");
  }
  if (wantCount && (!Number.isInteger(search.min_num_chains) || search.min_num_chains! < 1)) {
    problems.push("min chains must be an integer >= 1");
  }
  return problems;
}

export function nodeMap(tree: TreeDoc): Map<string, NodeDoc> {
  return new Map(tree.nodes.map((n) => [n.id, n]));
}
