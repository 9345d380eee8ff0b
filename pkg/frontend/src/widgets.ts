/**
 * Widget trees derived 1:1 from descriptors.
 *
 * The tree is the client's entire model of a table: one column widget per
 * descriptor column, one input widget per descriptor control, in descriptor
 * order. Nothing is added, dropped, or inferred, so the rendered field set
 * always equals the descriptor field set.
 *
 * Client-side validation here is a convenience for the person typing; the
 * server re-checks everything and remains the sole authority.
 */

import {
  ControlKind,
  Descriptor,
  FormDescriptor,
  GridDescriptor,
  WireLookup,
} from "./wire.js";

export interface ColumnWidget {
  field: string;
  header: string;
  width: number;
  editable: boolean;
  controlKind: ControlKind;
}

export interface GridWidget {
  kind: "grid";
  table: string;
  title: string;
  policyVersion: number;
  canDelete: boolean;
  pageSize: number;
  columns: ColumnWidget[];
}

export interface InputWidget {
  field: string;
  label: string;
  controlKind: ControlKind;
  row: number;
  col: number;
  tabOrder: number;
  required: boolean;
  lookup: WireLookup | null;
}

export interface FormWidget {
  kind: "form";
  table: string;
  title: string;
  policyVersion: number;
  inputs: InputWidget[];
}

export type WidgetTree = GridWidget | FormWidget;

/** Derive the widget tree for one descriptor, preserving descriptor order. */
export function buildWidgets(descriptor: Descriptor): WidgetTree {
  if (descriptor.kind === "grid") {
    return buildGridWidget(descriptor);
  }
  return buildFormWidget(descriptor);
}

export function buildGridWidget(descriptor: GridDescriptor): GridWidget {
  return {
    kind: "grid",
    table: descriptor.table,
    title: descriptor.title,
    policyVersion: descriptor.policyVersion,
    canDelete: descriptor.canDelete,
    pageSize: descriptor.pageSize,
    columns: descriptor.columns.map((col) => ({
      field: col.field,
      header: col.header,
      width: col.width,
      editable: col.editable,
      controlKind: col.controlKind,
    })),
  };
}

export function buildFormWidget(descriptor: FormDescriptor): FormWidget {
  return {
    kind: "form",
    table: descriptor.table,
    title: descriptor.title,
    policyVersion: descriptor.policyVersion,
    inputs: descriptor.controls.map((ctl) => ({
      field: ctl.field,
      label: ctl.label,
      controlKind: ctl.controlKind,
      row: ctl.row,
      col: ctl.col,
      tabOrder: ctl.tabOrder,
      required: ctl.required,
      lookup: ctl.lookup ?? null,
    })),
  };
}

/** The exact field set a tree will render, in render order. */
export function widgetFields(tree: WidgetTree): string[] {
  if (tree.kind === "grid") {
    return tree.columns.map((col) => col.field);
  }
  return tree.inputs.map((input) => input.field);
}

/** Field names a descriptor promises, in serialization order. */
export function descriptorFields(descriptor: Descriptor): string[] {
  if (descriptor.kind === "grid") {
    return descriptor.columns.map((col) => col.field);
  }
  return descriptor.controls.map((ctl) => ctl.field);
}

const INTEGER_RE = /^-?\d+$/;
const NUMBER_RE = /^-?\d+(\.\d+)?$/;
const DATE_RE = /^(\d{4})-(\d{2})-(\d{2})$/;

function isRealDate(y: number, m: number, d: number): boolean {
  const probe = new Date(Date.UTC(y, m - 1, d));
  return (
    probe.getUTCFullYear() === y && probe.getUTCMonth() === m - 1 && probe.getUTCDate() === d
  );
}

/**
 * Check one raw input string against its control kind.
 *
 * @returns an error message, or null when the value is acceptable.
 */
export function checkValue(kind: ControlKind, raw: string): string | null {
  switch (kind) {
    case "textbox":
      return null;
    case "numberbox":
      return NUMBER_RE.test(raw) ? null : "must be a number";
    case "checkbox":
      return raw === "true" || raw === "false" ? null : "must be true or false";
    case "datepicker": {
      const match = DATE_RE.exec(raw);
      if (match && isRealDate(Number(match[1]), Number(match[2]), Number(match[3]))) {
        return null;
      }
      return "must be a date (yyyy-mm-dd)";
    }
    case "lookup":
      // keys can be numeric or textual; the server validates the reference
      return null;
  }
}

/**
 * Everything that currently blocks submitting a form: empty required inputs
 * and inputs whose text fails their control kind. Submit only when empty.
 */
export function formBlockers(form: FormWidget, values: Record<string, string>): Map<string, string> {
  const blockers = new Map<string, string>();
  for (const input of form.inputs) {
    const raw = values[input.field] ?? "";
    if (raw === "") {
      if (input.required) {
        blockers.set(input.field, "required");
      }
      continue;
    }
    const problem = checkValue(input.controlKind, raw);
    if (problem !== null) {
      blockers.set(input.field, problem);
    }
  }
  return blockers;
}

/** Convert one validated input string into the typed value the service expects. */
export function cellValue(kind: ControlKind, raw: string): unknown {
  switch (kind) {
    case "numberbox":
      return INTEGER_RE.test(raw) ? Number.parseInt(raw, 10) : Number.parseFloat(raw);
    case "checkbox":
      return raw === "true";
    case "lookup":
      return INTEGER_RE.test(raw) ? Number.parseInt(raw, 10) : raw;
    default:
      return raw;
  }
}

/** Typed request body for a filled form; empty inputs are simply not sent. */
export function wireValues(
  form: FormWidget,
  values: Record<string, string>,
): Record<string, unknown> {
  const out: Record<string, unknown> = {};
  for (const input of form.inputs) {
    const raw = values[input.field] ?? "";
    if (raw !== "") {
      out[input.field] = cellValue(input.controlKind, raw);
    }
  }
  return out;
}
