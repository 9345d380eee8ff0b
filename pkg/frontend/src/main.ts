/**
 * Browser entry point: wires the DOM to the console flows.
 *
 * State lives in a handful of module fields; every change re-renders the
 * affected pane from VNodes. The admin pane appears only when the service
 * accepts an /admin request for the session, and every pane repaints from
 * fresh server responses, never from remembered descriptors.
 */

import { ApiError, FormgateClient } from "./client.js";
import {
  LookupChoice,
  PreviewView,
  TableView,
  applyPermission,
  bannerVNode,
  editCells,
  fetchPreview,
  formVNode,
  gridVNode,
  loadPage,
  lookupChoices,
  openTable,
  permissionsVNode,
  previewVNode,
  removeRow,
  submitForm,
} from "./console.js";
import { h, renderToString, VNode } from "./vdom.js";
import { formBlockers } from "./widgets.js";
import { ActionName, WirePermission } from "./wire.js";

const client = new FormgateClient(location.origin);

let username = "";
let tables: string[] = [];
let view: TableView | null = null;
let formValues: Record<string, string> = {};
let formChoices = new Map<string, LookupChoice[]>();
let adminAllowed = false;
let preview: PreviewView | null = null;
let adminMessage = "";

function pane(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (el === null) {
    throw new Error(`missing pane #${id}`);
  }
  return el;
}

function mount(id: string, ...nodes: Array<VNode | string>): void {
  pane(id).innerHTML = nodes.map(renderToString).join("");
}

function showError(err: unknown): void {
  const message =
    err instanceof ApiError
      ? `${err.status} ${err.code}${err.body?.reason ? `: ${err.body.reason}` : ""}`
      : String(err);
  mount("messages", bannerVNode(message));
}

// -- login ------------------------------------------------------------------

async function doLogin(user: string, password: string): Promise<void> {
  await client.login(user, password);
  username = user;
  tables = (await client.listTables()).tables;
  adminAllowed = true;
  try {
    await client.listPermissions();
  } catch {
    adminAllowed = false;
  }
  renderShell();
  if (adminAllowed) {
    await renderAdmin();
  }
}

function renderShell(): void {
  mount("messages");
  mount(
    "nav",
    h("span", { class: "whoami" }, username),
    h(
      "ul",
      { class: "tables" },
      ...tables.map((name) => h("li", {}, h("button", { class: "open-table", "data-table": name }, name))),
    ),
  );
  pane("admin").style.display = adminAllowed ? "" : "none";
}

// -- data pane --------------------------------------------------------------

async function showTable(table: string): Promise<void> {
  view = await openTable(client, table);
  formValues = {};
  formChoices = new Map();
  if (view.form !== null) {
    for (const input of view.form.inputs) {
      if (input.lookup !== null) {
        formChoices.set(input.field, await lookupChoices(client, input.lookup));
      }
    }
  }
  renderData();
}

function renderData(): void {
  if (view === null) {
    mount("data");
    return;
  }
  const parts: VNode[] = [];
  if (view.grid !== null) {
    parts.push(gridVNode(view.grid, view.rows));
    parts.push(
      h(
        "div",
        { class: "pager" },
        h("button", { class: "page-prev", disabled: view.page === 0 }, "prev"),
        h("span", {}, String(view.page)),
        h("button", { class: "page-next" }, "next"),
      ),
    );
    if (view.grid.columns.some((col) => col.editable)) {
      parts.push(
        h(
          "div",
          { class: "edit-bar" },
          h("label", {}, "row key "),
          h("input", { class: "edit-key", type: "text" }),
          h("button", { class: "apply-edits" }, "apply edited cells"),
        ),
      );
    }
  }
  if (view.form !== null) {
    parts.push(formVNode(view.form, formValues, formBlockers(view.form, formValues), formChoices));
  }
  if (view.grid === null && view.form === null) {
    parts.push(bannerVNode("nothing to show for this table"));
  }
  mount("data", ...parts);
}

function collectEditedCells(): Record<string, string> {
  const changes: Record<string, string> = {};
  pane("data")
    .querySelectorAll<HTMLTableCellElement>("td.editable")
    .forEach((cell) => {
      const field = cell.dataset.field;
      if (field !== undefined) {
        changes[field] = cell.textContent ?? "";
      }
    });
  return changes;
}

async function refreshRows(): Promise<void> {
  if (view !== null) {
    view = await loadPage(client, view, view.page);
    renderData();
  }
}

// -- admin pane -------------------------------------------------------------

async function renderAdmin(): Promise<void> {
  const listing = await client.listPermissions();
  const target = preview ?? {
    username,
    table: tables[0] ?? "",
    kind: "grid" as const,
    tree: null,
    policyVersion: null,
    problem: null,
  };
  preview = await fetchPreview(client, target);
  mount(
    "admin",
    h("h2", {}, "policy"),
    adminMessage !== "" ? bannerVNode(adminMessage) : "",
    permissionsVNode(listing.permissions),
    h(
      "form",
      { class: "perm-add" },
      h("input", { name: "role", placeholder: "role" }),
      h(
        "select",
        { name: "sign" },
        h("option", { value: "+" }, "+"),
        h("option", { value: "-" }, "-"),
      ),
      h(
        "select",
        { name: "action" },
        ...["Select", "Insert", "Update", "Delete"].map((a) => h("option", { value: a }, a)),
      ),
      h("input", { name: "table", placeholder: "table" }),
      h("input", { name: "field", placeholder: "field (blank for table scope)" }),
      h("button", { type: "submit" }, "add"),
    ),
    h(
      "form",
      { class: "preview-pick" },
      h("input", { name: "user", value: preview.username, placeholder: "user" }),
      h("input", { name: "table", value: preview.table, placeholder: "table" }),
      h(
        "select",
        { name: "kind" },
        h("option", { value: "grid", selected: preview.kind === "grid" }, "grid"),
        h("option", { value: "form", selected: preview.kind === "form" }, "form"),
      ),
      h("button", { type: "submit" }, "preview"),
    ),
    previewVNode(preview),
  );
  adminMessage = "";
}

function permFromForm(form: HTMLFormElement): WirePermission {
  const data = new FormData(form);
  const field = String(data.get("field") ?? "").trim();
  return {
    role: String(data.get("role") ?? "").trim(),
    sign: data.get("sign") === "-" ? "-" : "+",
    action: String(data.get("action") ?? "Select") as ActionName,
    table: String(data.get("table") ?? "").trim(),
    field: field === "" ? null : field,
  };
}

async function mutatePermission(op: "add" | "remove", perm: WirePermission): Promise<void> {
  if (preview === null) {
    return;
  }
  const outcome = await applyPermission(client, op, perm, preview);
  if (outcome.ok) {
    preview = outcome.preview;
  } else {
    adminMessage = `${outcome.code}: ${outcome.message}`;
  }
  await renderAdmin();
  // a policy change may reshape this session's own panes as well
  if (view !== null) {
    await showTable(view.table);
  }
}

// -- event wiring -----------------------------------------------------------

function wire(): void {
  pane("login").addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(event.target as HTMLFormElement);
    doLogin(String(data.get("username") ?? ""), String(data.get("password") ?? "")).catch(showError);
  });

  pane("nav").addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (target.classList.contains("open-table") && target.dataset.table !== undefined) {
      showTable(target.dataset.table).catch(showError);
    }
  });

  pane("data").addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (view === null) {
      return;
    }
    if (target.classList.contains("page-prev")) {
      loadPage(client, view, Math.max(0, view.page - 1))
        .then((v) => {
          view = v;
          renderData();
        })
        .catch(showError);
    } else if (target.classList.contains("page-next")) {
      loadPage(client, view, view.page + 1)
        .then((v) => {
          view = v;
          renderData();
        })
        .catch(showError);
    } else if (target.classList.contains("apply-edits")) {
      const grid = view.grid;
      if (grid === null) {
        return;
      }
      const key = pane("data").querySelector<HTMLInputElement>("input.edit-key")?.value ?? "";
      editCells(client, grid, key, collectEditedCells())
        .then(refreshRows)
        .catch(showError);
    } else if (target.classList.contains("row-delete")) {
      const grid = view.grid;
      const key = window.prompt("row key to delete");
      if (grid !== null && key !== null && key !== "") {
        removeRow(client, grid.table, key).then(refreshRows).catch(showError);
      }
    }
  });

  pane("data").addEventListener("submit", (event) => {
    event.preventDefault();
    if (view === null || view.form === null) {
      return;
    }
    const form = view.form;
    const data = new FormData(event.target as HTMLFormElement);
    formValues = {};
    for (const input of form.inputs) {
      if (input.controlKind === "checkbox") {
        formValues[input.field] = data.get(input.field) === null ? "" : "true";
      } else {
        formValues[input.field] = String(data.get(input.field) ?? "");
      }
    }
    submitForm(client, form, formValues)
      .then((outcome) => {
        if (outcome.ok) {
          formValues = {};
          return refreshRows();
        }
        renderData();
        return undefined;
      })
      .catch(showError);
  });

  pane("admin").addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (target.classList.contains("perm-remove")) {
      const index = Number(target.dataset.index ?? "-1");
      client
        .listPermissions()
        .then((listing) => {
          const perm = listing.permissions[index];
          return perm === undefined ? undefined : mutatePermission("remove", perm);
        })
        .catch(showError);
    }
  });

  pane("admin").addEventListener("submit", (event) => {
    event.preventDefault();
    const form = event.target as HTMLFormElement;
    if (form.classList.contains("perm-add")) {
      mutatePermission("add", permFromForm(form)).catch(showError);
    } else if (form.classList.contains("preview-pick")) {
      const data = new FormData(form);
      preview = {
        username: String(data.get("user") ?? ""),
        table: String(data.get("table") ?? ""),
        kind: data.get("kind") === "form" ? "form" : "grid",
        tree: null,
        policyVersion: null,
        problem: null,
      };
      renderAdmin().catch(showError);
    }
  });
}

wire();
