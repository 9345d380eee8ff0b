/**
 * Tiny virtual-node layer so views stay plain data until mount time.
 *
 * Views build VNode trees; the browser entry point serializes them with
 * renderToString and swaps innerHTML. Tests inspect the trees (or their
 * serialized form) directly in node, no DOM required.
 */

export type Props = Record<string, string | number | boolean>;

export interface VNode {
  tag: string;
  props: Props;
  children: Array<VNode | string>;
}

export function h(tag: string, props: Props = {}, ...children: Array<VNode | string>): VNode {
  return { tag, props, children };
}

const VOID_TAGS = new Set(["br", "hr", "img", "input", "meta", "link"]);

function escapeText(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

function escapeAttr(text: string): string {
  return escapeText(text).replace(/"/g, "&quot;");
}

function renderProps(props: Props): string {
  const parts: string[] = [];
  for (const [name, value] of Object.entries(props)) {
    if (value === false) {
      continue;
    }
    if (value === true) {
      parts.push(` ${name}`);
    } else {
      parts.push(` ${name}="${escapeAttr(String(value))}"`);
    }
  }
  return parts.join("");
}

export function renderToString(node: VNode | string): string {
  if (typeof node === "string") {
    return escapeText(node);
  }
  const open = `<${node.tag}${renderProps(node.props)}>`;
  if (VOID_TAGS.has(node.tag)) {
    return open;
  }
  const inner = node.children.map(renderToString).join("");
  return `${open}${inner}</${node.tag}>`;
}

/** Depth-first search for the first node satisfying the predicate. */
export function findNode(node: VNode | string, pred: (n: VNode) => boolean): VNode | null {
  if (typeof node === "string") {
    return null;
  }
  if (pred(node)) {
    return node;
  }
  for (const child of node.children) {
    const hit = findNode(child, pred);
    if (hit !== null) {
      return hit;
    }
  }
  return null;
}

/** Collect every node satisfying the predicate, document order. */
export function findAll(node: VNode | string, pred: (n: VNode) => boolean): VNode[] {
  const out: VNode[] = [];
  const walk = (n: VNode | string): void => {
    if (typeof n === "string") {
      return;
    }
    if (pred(n)) {
      out.push(n);
    }
    n.children.forEach(walk);
  };
  walk(node);
  return out;
}
