// REST client for the /api/v1 contract. Every mutation returns the server's
// authoritative project payload; a stale revision surfaces as ApiError(409).

import type {
  ExpansionParams,
  GraphDoc,
  JudgeResult,
  ProgressRecord,
  ProjectDoc,
  ProjectPayload,
  SearchSettings,
} from "./types.js";
import { streamRecords } from "./sse.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

async function expectJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(private baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl}/api/v1${path}`;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return fetch(this.url(path), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    }).then((r) => expectJson<T>(r));
  }

  private put<T>(path: string, body: unknown): Promise<T> {
    return fetch(this.url(path), {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    }).then((r) => expectJson<T>(r));
  }

  createProject(rootText: string): Promise<ProjectPayload> {
    return this.post("/projects", { root_text: rootText });
  }

  importProject(project: ProjectDoc): Promise<ProjectPayload> {
    return this.post("/projects", { project });
  }

  getProject(projectId: string): Promise<ProjectPayload> {
    return fetch(this.url(`/projects/${projectId}`)).then((r) => expectJson<ProjectPayload>(r));
  }

  expand(
    projectId: string,
    nodeId: string,
    revision: number,
    direction: "forward" | "backward",
    params: ExpansionParams,
  ): Promise<ProjectPayload> {
    return this.post(`/projects/${projectId}/nodes/${nodeId}/expand`, {
      revision,
      direction,
      params,
    });
  }

  generateGraph(
    projectId: string,
    revision: number,
    instruction: string,
    entityTypes: string[],
    relationshipTypes: string[],
  ): Promise<ProjectPayload> {
    return this.post(`/projects/${projectId}/graph/generate`, {
      revision,
      instruction,
      entity_types: entityTypes,
      relationship_types: relationshipTypes,
    });
  }

  putGraph(projectId: string, revision: number, graph: GraphDoc): Promise<ProjectPayload> {
    return this.put(`/projects/${projectId}/graph`, { revision, graph });
  }

  startMcts(
    projectId: string,
    revision: number,
    search: SearchSettings,
    params: ExpansionParams,
  ): Promise<{ run_id: string; status: string }> {
    return this.post(`/projects/${projectId}/mcts`, { revision, params, ...search });
  }

  stopMcts(projectId: string, runId: string): Promise<{ status: string }> {
    return fetch(this.url(`/projects/${projectId}/mcts/${runId}`), { method: "DELETE" }).then(
      (r) => expectJson(r),
    );
  }

  runStatus(
    projectId: string,
    runId: string,
  ): Promise<{ status: string; iterations_run: number }> {
    return fetch(this.url(`/projects/${projectId}/mcts/${runId}`)).then((r) => expectJson(r));
  }

  judgeChain(projectId: string, leafId: string): Promise<JudgeResult> {
    return this.post(`/projects/${projectId}/chains/${leafId}/judge`, {});
  }

  /** Stream run progress; `onRecord` fires per record until the run ends. */
  async followRun(
    projectId: string,
    runId: string,
    onRecord: (record: ProgressRecord) => void,
  ): Promise<void> {
    const response = await fetch(this.url(`/projects/${projectId}/mcts/${runId}/events`));
    if (!response.ok) throw new ApiError(response.status, response.statusText);
    for await (const record of streamRecords(response)) {
      onRecord(record);
    }
  }
}
