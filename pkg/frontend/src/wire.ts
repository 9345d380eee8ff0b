/**
 * Wire contract shared with the formgate HTTP service.
 *
 * Descriptors arrive in a canonical JSON format and are the client's only
 * source of schema knowledge. parseDescriptor is deliberately strict: a
 * payload that deviates from the canonical shape is rejected rather than
 * patched up, so a rendering bug can never widen what the server chose to
 * disclose.
 */

export type ControlKind = "textbox" | "numberbox" | "checkbox" | "datepicker" | "lookup";

export type ActionName = "Select" | "Insert" | "Update" | "Delete";

export interface WireColumn {
  field: string;
  header: string;
  width: number;
  ordinal: number;
  editable: boolean;
  controlKind: ControlKind;
}

export interface GridDescriptor {
  kind: "grid";
  table: string;
  title: string;
  policyVersion: number;
  canDelete: boolean;
  pageSize: number;
  columns: WireColumn[];
}

export interface WireLookup {
  table: string;
  keyField: string;
  displayField: string;
}

export interface WireControl {
  field: string;
  label: string;
  controlKind: ControlKind;
  row: number;
  col: number;
  tabOrder: number;
  required: boolean;
  lookup?: WireLookup;
}

export interface FormDescriptor {
  kind: "form";
  table: string;
  title: string;
  policyVersion: number;
  controls: WireControl[];
}

export type Descriptor = GridDescriptor | FormDescriptor;

export interface TablesPayload {
  policyVersion: number;
  tables: string[];
}

export interface RowsPayload {
  table: string;
  policyVersion: number;
  rows: Array<Record<string, unknown>>;
}

export interface WirePermission {
  role: string;
  sign: "+" | "-";
  action: ActionName;
  table: string;
  field: string | null;
}

export interface ErrorBody {
  error: string;
  field?: string;
  reason?: string;
}

/** Raised when a payload does not match the canonical descriptor format. */
export class DescriptorFormatError extends Error {}

const CONTROL_KINDS: ReadonlySet<string> = new Set([
  "textbox",
  "numberbox",
  "checkbox",
  "datepicker",
  "lookup",
]);

type Shape = Record<string, "string" | "number" | "boolean">;

function asRecord(value: unknown, where: string): Record<string, unknown> {
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    throw new DescriptorFormatError(`${where}: expected an object`);
  }
  return value as Record<string, unknown>;
}

// exact-key check: canonical payloads carry no extras and omit nothing
function checkShape(obj: Record<string, unknown>, shape: Shape, optional: string[], where: string): void {
  for (const [key, kind] of Object.entries(shape)) {
    if (!(key in obj)) {
      throw new DescriptorFormatError(`${where}: missing key "${key}"`);
    }
    const value = obj[key];
    if (typeof value !== kind) {
      throw new DescriptorFormatError(`${where}: "${key}" must be a ${kind}`);
    }
    if (kind === "number" && !Number.isFinite(value as number)) {
      throw new DescriptorFormatError(`${where}: "${key}" must be a finite number`);
    }
  }
  for (const key of Object.keys(obj)) {
    if (!(key in shape) && !optional.includes(key)) {
      throw new DescriptorFormatError(`${where}: unexpected key "${key}"`);
    }
  }
}

function checkControlKind(value: unknown, where: string): ControlKind {
  if (typeof value !== "string" || !CONTROL_KINDS.has(value)) {
    throw new DescriptorFormatError(`${where}: unknown controlKind ${JSON.stringify(value)}`);
  }
  return value as ControlKind;
}

function parseColumn(value: unknown, where: string): WireColumn {
  const obj = asRecord(value, where);
  checkShape(
    obj,
    {
      field: "string",
      header: "string",
      width: "number",
      ordinal: "number",
      editable: "boolean",
      controlKind: "string",
    },
    [],
    where,
  );
  checkControlKind(obj.controlKind, where);
  return obj as unknown as WireColumn;
}

function parseControl(value: unknown, where: string): WireControl {
  const obj = asRecord(value, where);
  checkShape(
    obj,
    {
      field: "string",
      label: "string",
      controlKind: "string",
      row: "number",
      col: "number",
      tabOrder: "number",
      required: "boolean",
    },
    ["lookup"],
    where,
  );
  checkControlKind(obj.controlKind, where);
  if ("lookup" in obj) {
    const lookup = asRecord(obj.lookup, `${where}.lookup`);
    checkShape(
      lookup,
      { table: "string", keyField: "string", displayField: "string" },
      [],
      `${where}.lookup`,
    );
  }
  return obj as unknown as WireControl;
}

/**
 * Parse one serialized descriptor, enforcing the canonical format exactly.
 *
 * @throws DescriptorFormatError when the text is not a canonical descriptor.
 */
export function parseDescriptor(text: string): Descriptor {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    throw new DescriptorFormatError("descriptor: not valid JSON");
  }
  const obj = asRecord(raw, "descriptor");
  if (obj.kind === "grid") {
    checkShape(
      obj,
      {
        kind: "string",
        table: "string",
        title: "string",
        policyVersion: "number",
        canDelete: "boolean",
        pageSize: "number",
      },
      ["columns"],
      "grid",
    );
    if (!Array.isArray(obj.columns)) {
      throw new DescriptorFormatError("grid: missing columns array");
    }
    obj.columns.forEach((col, i) => parseColumn(col, `grid.columns[${i}]`));
    return obj as unknown as GridDescriptor;
  }
  if (obj.kind === "form") {
    checkShape(
      obj,
      { kind: "string", table: "string", title: "string", policyVersion: "number" },
      ["controls"],
      "form",
    );
    if (!Array.isArray(obj.controls)) {
      throw new DescriptorFormatError("form: missing controls array");
    }
    obj.controls.forEach((ctl, i) => parseControl(ctl, `form.controls[${i}]`));
    return obj as unknown as FormDescriptor;
  }
  throw new DescriptorFormatError(`descriptor: unknown kind ${JSON.stringify(obj.kind)}`);
}
