/**
 * The two faces of the console.
 *
 * End-user face: turns descriptors into grids and forms, loads rows, and
 * pushes edits back through the service. Administrator face: mutates
 * permissions and refetches a target user's preview in the same breath.
 *
 * All functions here are DOM-free: they speak to the service through a
 * FormgateClient and produce widget trees or VNodes for the entry point to
 * mount. None of them decides access; a denied request surfaces as the
 * service's own error, never as a client-side guess.
 */

import { ApiError, FormgateClient } from "./client.js";
import { h, VNode } from "./vdom.js";
import {
  ControlKind,
  DescriptorFormatError,
  RowsPayload,
  WireLookup,
  WirePermission,
  parseDescriptor,
} from "./wire.js";
import {
  FormWidget,
  GridWidget,
  WidgetTree,
  buildWidgets,
  cellValue,
  formBlockers,
  wireValues,
} from "./widgets.js";

export interface LookupChoice {
  key: string;
  label: string;
}

export type RenderResult =
  | { tree: WidgetTree; problem: null }
  | { tree: null; problem: string };

/** Parse serialized descriptor text into a widget tree, or a banner message. */
export function renderDescriptor(text: string): RenderResult {
  try {
    return { tree: buildWidgets(parseDescriptor(text)), problem: null };
  } catch (err) {
    if (err instanceof DescriptorFormatError) {
      return { tree: null, problem: `malformed descriptor: ${err.message}` };
    }
    throw err;
  }
}

// -- end-user face ----------------------------------------------------------

export interface TableView {
  table: string;
  grid: GridWidget | null;
  form: FormWidget | null;
  rows: RowsPayload | null;
  page: number;
}

function isMissing(err: unknown): boolean {
  return err instanceof ApiError && err.status === 404;
}

/**
 * Open one table: grid and form descriptors plus the first page of rows.
 * A face the service denies entirely (404) is simply absent from the view.
 */
export async function openTable(client: FormgateClient, table: string): Promise<TableView> {
  let grid: GridWidget | null = null;
  let form: FormWidget | null = null;
  try {
    grid = buildWidgets(await client.gridDescriptor(table)) as GridWidget;
  } catch (err) {
    if (!isMissing(err)) {
      throw err;
    }
  }
  try {
    form = buildWidgets(await client.formDescriptor(table)) as FormWidget;
  } catch (err) {
    if (!isMissing(err)) {
      throw err;
    }
  }
  const rows = grid !== null ? await client.rows(table, 0) : null;
  return { table, grid, form, rows, page: 0 };
}

export async function loadPage(
  client: FormgateClient,
  view: TableView,
  page: number,
): Promise<TableView> {
  const rows = await client.rows(view.table, page);
  return { ...view, rows, page };
}

export type SubmitOutcome =
  | { ok: true; key: unknown[] }
  | { ok: false; blockers: Map<string, string> };

/**
 * Submit a filled form. Blocked locally while any required or ill-typed
 * input remains; otherwise inserted through the service in one request.
 */
export async function submitForm(
  client: FormgateClient,
  form: FormWidget,
  values: Record<string, string>,
): Promise<SubmitOutcome> {
  const blockers = formBlockers(form, values);
  if (blockers.size > 0) {
    return { ok: false, blockers };
  }
  const result = await client.insertRow(form.table, wireValues(form, values));
  return { ok: true, key: result.key };
}

/**
 * Push one batch of edited cells for a single row as one PATCH.
 *
 * The row key is supplied by the operator: descriptors never disclose which
 * fields form the key, so the client has nothing to derive it from.
 */
export async function editCells(
  client: FormgateClient,
  grid: GridWidget,
  key: string,
  changes: Record<string, string>,
): Promise<number> {
  const patch: Record<string, unknown> = {};
  for (const column of grid.columns) {
    if (!column.editable || !(column.field in changes)) {
      continue;
    }
    const raw = changes[column.field] ?? "";
    patch[column.field] = raw === "" ? null : cellValue(column.controlKind, raw);
  }
  return client.updateRow(grid.table, key, patch);
}

export function removeRow(client: FormgateClient, table: string, key: string): Promise<number> {
  return client.deleteRow(table, key);
}

/** Resolve a lookup control's choices from the referenced table's rows. */
export async function lookupChoices(
  client: FormgateClient,
  lookup: WireLookup,
): Promise<LookupChoice[]> {
  const choices: LookupChoice[] = [];
  for (let page = 0; ; page += 1) {
    const payload = await client.rows(lookup.table, page);
    if (payload.rows.length === 0) {
      break;
    }
    for (const row of payload.rows) {
      choices.push({
        key: String(row[lookup.keyField] ?? ""),
        label: String(row[lookup.displayField] ?? ""),
      });
    }
  }
  return choices;
}

// -- administrator face -----------------------------------------------------

export interface PreviewTarget {
  username: string;
  table: string;
  kind: "grid" | "form";
}

export interface PreviewView extends PreviewTarget {
  tree: WidgetTree | null;
  policyVersion: number | null;
  problem: string | null;
}

/** Fetch the interface a target user would receive right now. */
export async function fetchPreview(
  client: FormgateClient,
  target: PreviewTarget,
): Promise<PreviewView> {
  try {
    const descriptor =
      target.kind === "grid"
        ? await client.previewGrid(target.username, target.table)
        : await client.previewForm(target.username, target.table);
    return {
      ...target,
      tree: buildWidgets(descriptor),
      policyVersion: descriptor.policyVersion,
      problem: null,
    };
  } catch (err) {
    if (isMissing(err)) {
      return { ...target, tree: null, policyVersion: null, problem: "nothing visible for this user" };
    }
    throw err;
  }
}

export type AdminOutcome =
  | { ok: true; policyVersion: number; preview: PreviewView }
  | { ok: false; status: number; code: string; message: string };

/**
 * Apply one permission mutation, then refetch the live preview: exactly one
 * write and one read per call. A rejected mutation comes back inline so the
 * admin face can show it next to the editor.
 */
export async function applyPermission(
  client: FormgateClient,
  op: "add" | "remove",
  perm: WirePermission,
  target: PreviewTarget,
): Promise<AdminOutcome> {
  let policyVersion: number;
  try {
    policyVersion =
      op === "add" ? await client.addPermission(perm) : await client.removePermission(perm);
  } catch (err) {
    if (err instanceof ApiError) {
      return {
        ok: false,
        status: err.status,
        code: err.code,
        message: err.body?.reason ?? err.body?.field ?? err.code,
      };
    }
    throw err;
  }
  return { ok: true, policyVersion, preview: await fetchPreview(client, target) };
}

// -- views ------------------------------------------------------------------

export function bannerVNode(message: string): VNode {
  return h("div", { class: "error-banner", role: "alert" }, message);
}

function cellText(value: unknown): string {
  if (value === null || value === undefined) {
    return "";
  }
  return String(value);
}

/** Grid widget plus current rows as a plain table element. */
export function gridVNode(grid: GridWidget, rows: RowsPayload | null): VNode {
  const headers = grid.columns.map((col) =>
    h("th", { "data-field": col.field, style: `width:${col.width}px` }, col.header),
  );
  if (grid.canDelete) {
    headers.push(h("th", { class: "delete-col" }, ""));
  }
  const body = (rows?.rows ?? []).map((row, index) => {
    const cells = grid.columns.map((col) =>
      h(
        "td",
        {
          "data-field": col.field,
          class: col.editable ? "cell editable" : "cell",
          contenteditable: col.editable,
        },
        cellText(row[col.field]),
      ),
    );
    if (grid.canDelete) {
      cells.push(h("td", {}, h("button", { class: "row-delete", "data-row": index }, "×")));
    }
    return h("tr", { "data-row": index }, ...cells);
  });
  return h(
    "table",
    { class: "fg-grid", "data-table": grid.table, "data-version": grid.policyVersion },
    h("caption", {}, grid.title),
    h("thead", {}, h("tr", {}, ...headers)),
    h("tbody", {}, ...body),
  );
}

function inputVNode(
  kind: ControlKind,
  field: string,
  value: string,
  required: boolean,
  tabOrder: number,
  choices: LookupChoice[] | undefined,
): VNode {
  const common = { name: field, tabindex: tabOrder, required };
  switch (kind) {
    case "numberbox":
      return h("input", { ...common, type: "number", step: "any", value });
    case "datepicker":
      return h("input", { ...common, type: "date", value });
    case "checkbox":
      return h("input", { ...common, type: "checkbox", checked: value === "true" });
    case "lookup":
      return h(
        "select",
        common,
        h("option", { value: "", selected: value === "" }, "(none)"),
        ...(choices ?? []).map((choice) =>
          h("option", { value: choice.key, selected: choice.key === value }, choice.label),
        ),
      );
    default:
      return h("input", { ...common, type: "text", value });
  }
}

/** Form widget as a positioned set of labelled controls plus a submit button. */
export function formVNode(
  form: FormWidget,
  values: Record<string, string>,
  blockers: Map<string, string>,
  choices: Map<string, LookupChoice[]>,
): VNode {
  const controls = form.inputs.map((input) => {
    const problem = blockers.get(input.field);
    const children: Array<VNode | string> = [
      h("label", { for: `control-${input.field}` }, input.required ? `${input.label} *` : input.label),
      inputVNode(
        input.controlKind,
        input.field,
        values[input.field] ?? "",
        input.required,
        input.tabOrder,
        choices.get(input.field),
      ),
    ];
    if (problem !== undefined) {
      children.push(h("span", { class: "field-error" }, problem));
    }
    return h(
      "div",
      {
        class: "control",
        "data-field": input.field,
        style: `grid-row:${input.row + 1};grid-column:${input.col + 1}`,
      },
      ...children,
    );
  });
  return h(
    "form",
    { class: "fg-form", "data-table": form.table, "data-version": form.policyVersion },
    h("h2", {}, form.title),
    h("div", { class: "form-grid" }, ...controls),
    h("button", { type: "submit", disabled: blockers.size > 0 }, "Save"),
  );
}

/** The admin face's live preview pane for one target user and table. */
export function previewVNode(view: PreviewView): VNode {
  const children: Array<VNode | string> = [
    h(
      "h3",
      {},
      `${view.table} as ${view.username}`,
      view.policyVersion !== null
        ? h("span", { class: "version" }, ` v${view.policyVersion}`)
        : "",
    ),
  ];
  if (view.problem !== null) {
    children.push(bannerVNode(view.problem));
  } else if (view.tree !== null) {
    children.push(
      view.tree.kind === "grid"
        ? gridVNode(view.tree, null)
        : formVNode(view.tree, {}, new Map(), new Map()),
    );
  }
  return h("div", { class: "preview", "data-user": view.username }, ...children);
}

/** Current permission list as a table with one remove button per entry. */
export function permissionsVNode(permissions: WirePermission[]): VNode {
  const rows = permissions.map((perm, index) =>
    h(
      "tr",
      { "data-index": index },
      h("td", {}, perm.role),
      h("td", { class: perm.sign === "+" ? "grant" : "deny" }, perm.sign),
      h("td", {}, perm.action),
      h("td", {}, perm.field === null ? `${perm.table}.*` : `${perm.table}.${perm.field}`),
      h("td", {}, h("button", { class: "perm-remove", "data-index": index }, "remove")),
    ),
  );
  return h(
    "table",
    { class: "fg-permissions" },
    h(
      "thead",
      {},
      h(
        "tr",
        {},
        h("th", {}, "role"),
        h("th", {}, "sign"),
        h("th", {}, "action"),
        h("th", {}, "scope"),
        h("th", {}, ""),
      ),
    ),
    h("tbody", {}, ...rows),
  );
}
