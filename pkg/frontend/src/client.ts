/**
 * HTTP client for the formgate service.
 *
 * Every call goes over fetch; nothing else touches the store. The client
 * keeps one bearer token per instance and otherwise holds no state, so a
 * response always reflects the server's view at the moment of the request.
 */

import {
  Descriptor,
  ErrorBody,
  FormDescriptor,
  GridDescriptor,
  RowsPayload,
  TablesPayload,
  WirePermission,
  parseDescriptor,
} from "./wire.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** A non-2xx response, carrying the parsed error body when one was sent. */
export class ApiError extends Error {
  readonly status: number;
  readonly body: ErrorBody | null;

  constructor(status: number, body: ErrorBody | null) {
    super(body ? `${status} ${body.error}` : `${status}`);
    this.status = status;
    this.body = body;
  }

  /** The machine-readable error code, or "" when the body was not JSON. */
  get code(): string {
    return this.body?.error ?? "";
  }
}

export interface PermissionListing {
  policyVersion: number;
  permissions: WirePermission[];
}

export interface AssignmentListing {
  policyVersion: number;
  assignments: Array<{ user: string; role: string }>;
}

export class FormgateClient {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;
  private token: string | null = null;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  get loggedIn(): boolean {
    return this.token !== null;
  }

  private async request(method: string, path: string, body?: unknown): Promise<Response> {
    const headers: Record<string, string> = {};
    if (this.token !== null) {
      headers["Authorization"] = `Bearer ${this.token}`;
    }
    const init: RequestInit = { method, headers };
    if (body !== undefined) {
      headers["Content-Type"] = "application/json";
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    if (!resp.ok) {
      let parsed: ErrorBody | null = null;
      try {
        parsed = (await resp.json()) as ErrorBody;
      } catch {
        parsed = null;
      }
      throw new ApiError(resp.status, parsed);
    }
    return resp;
  }

  private async requestJson<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.request(method, path, body);
    return (await resp.json()) as T;
  }

  private async requestDescriptor(path: string): Promise<Descriptor> {
    const resp = await this.request("GET", path);
    return parseDescriptor(await resp.text());
  }

  async login(username: string, password: string): Promise<void> {
    this.token = null;
    const data = await this.requestJson<{ token: string }>("POST", "/login", {
      username,
      password,
    });
    this.token = data.token;
  }

  logout(): void {
    this.token = null;
  }

  // -- per-user data surface ------------------------------------------------

  listTables(): Promise<TablesPayload> {
    return this.requestJson("GET", "/tables");
  }

  async gridDescriptor(table: string): Promise<GridDescriptor> {
    const desc = await this.requestDescriptor(`/tables/${encodeURIComponent(table)}/grid`);
    if (desc.kind !== "grid") {
      throw new ApiError(500, { error: "descriptor_kind_mismatch" });
    }
    return desc;
  }

  async formDescriptor(table: string): Promise<FormDescriptor> {
    const desc = await this.requestDescriptor(`/tables/${encodeURIComponent(table)}/form`);
    if (desc.kind !== "form") {
      throw new ApiError(500, { error: "descriptor_kind_mismatch" });
    }
    return desc;
  }

  rows(table: string, page = 0): Promise<RowsPayload> {
    return this.requestJson("GET", `/tables/${encodeURIComponent(table)}/rows?page=${page}`);
  }

  insertRow(table: string, values: Record<string, unknown>): Promise<{ key: unknown[] }> {
    return this.requestJson("POST", `/tables/${encodeURIComponent(table)}/rows`, values);
  }

  async updateRow(table: string, key: string, patch: Record<string, unknown>): Promise<number> {
    const data = await this.requestJson<{ updated: number }>(
      "PATCH",
      `/tables/${encodeURIComponent(table)}/rows/${encodeURIComponent(key)}`,
      patch,
    );
    return data.updated;
  }

  async deleteRow(table: string, key: string): Promise<number> {
    const data = await this.requestJson<{ deleted: number }>(
      "DELETE",
      `/tables/${encodeURIComponent(table)}/rows/${encodeURIComponent(key)}`,
    );
    return data.deleted;
  }

  // -- administrator surface ------------------------------------------------

  listPermissions(): Promise<PermissionListing> {
    return this.requestJson("GET", "/admin/permissions");
  }

  async addPermission(perm: WirePermission, expectedVersion?: number): Promise<number> {
    const body = expectedVersion === undefined ? perm : { ...perm, expectedVersion };
    const data = await this.requestJson<{ policyVersion: number }>("POST", "/admin/permissions", body);
    return data.policyVersion;
  }

  async removePermission(perm: WirePermission, expectedVersion?: number): Promise<number> {
    const body = expectedVersion === undefined ? perm : { ...perm, expectedVersion };
    const data = await this.requestJson<{ policyVersion: number }>(
      "DELETE",
      "/admin/permissions",
      body,
    );
    return data.policyVersion;
  }

  listAssignments(): Promise<AssignmentListing> {
    return this.requestJson("GET", "/admin/assignments");
  }

  previewGrid(username: string, table: string): Promise<GridDescriptor> {
    return this.previewDescriptor(username, table, "grid") as Promise<GridDescriptor>;
  }

  previewForm(username: string, table: string): Promise<FormDescriptor> {
    return this.previewDescriptor(username, table, "form") as Promise<FormDescriptor>;
  }

  private async previewDescriptor(
    username: string,
    table: string,
    kind: "grid" | "form",
  ): Promise<Descriptor> {
    const path = `/admin/preview/${encodeURIComponent(username)}/tables/${encodeURIComponent(table)}/${kind}`;
    const desc = await this.requestDescriptor(path);
    if (desc.kind !== kind) {
      throw new ApiError(500, { error: "descriptor_kind_mismatch" });
    }
    return desc;
  }
}
