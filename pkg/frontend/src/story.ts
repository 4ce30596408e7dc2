// Chain extraction and reading-order assembly from a project snapshot.

import type { NodeDoc, TreeDoc } from "./types.js";
import { nodeMap } from "./types.js";

/** Root-to-node path of node ids; throws on unknown ids. */
export function chainTo(tree: TreeDoc, nodeId: string): string[] {
  const nodes = nodeMap(tree);
  const path: string[] = [];
  let cursor: NodeDoc | undefined = nodes.get(nodeId);
  if (!cursor) throw new Error(`unknown node ${nodeId}`);
  while (cursor) {
    path.push(cursor.id);
    cursor = cursor.parent_id ? nodes.get(cursor.parent_id) : undefined;
  }
  return path.reverse();
}

/**
 * Texts of a chain in reading order: a backward (cause) event is placed
 * immediately before its parent's text, everything else appends.
 */
export function storyOrderTexts(tree: TreeDoc, path: string[]): string[] {
  const nodes = nodeMap(tree);
  const order: string[] = [];
  const position = new Map<string, number>();
  for (const id of path) {
    const node = nodes.get(id);
    if (!node) throw new Error(`unknown node ${id}`);
    const parentAt = node.parent_id !== null ? position.get(node.parent_id) : undefined;
    const index = node.direction === "backward" && parentAt !== undefined ? parentAt : order.length;
    order.splice(index, 0, id);
    order.forEach((nid, i) => position.set(nid, i));
  }
  return order.map((id) => nodes.get(id)!.text);
}

/** Leaf of the deepest chain, for "read the current story" defaults. */
export function deepestLeaf(tree: TreeDoc): string {
  const nodes = nodeMap(tree);
  let best = tree.root_id;
  let bestDepth = 0;
  for (const node of tree.nodes) {
    if (node.children.length > 0) continue;
    let depth = 0;
    let cursor: NodeDoc | undefined = node;
    while (cursor && cursor.parent_id !== null) {
      depth += 1;
      cursor = nodes.get(cursor.parent_id);
    }
    if (depth > bestDepth || (depth === bestDepth && node.seq < nodes.get(best)!.seq)) {
      best = node.id;
      bestDepth = depth;
    }
  }
  return best;
}
