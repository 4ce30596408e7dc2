// SVG tree canvas: layered layout, pan by drag, zoom by wheel, parent->child
// edges labeled "leads to", selection and highlight styling by CSS class.

import type { TreeDoc } from "./types.js";
import { nodeMap } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const NODE_W = 180;
const NODE_H = 46;
const X_GAP = 240;
const Y_GAP = 64;

interface Point {
  x: number;
  y: number;
}

/** Depth-layered layout: x by depth, leaves stacked, parents centered. */
export function layoutTree(tree: TreeDoc): Map<string, Point> {
  const nodes = nodeMap(tree);
  const positions = new Map<string, Point>();
  let nextLeafY = 0;

  const place = (id: string, depth: number): number => {
    const node = nodes.get(id)!;
    let y: number;
    if (node.children.length === 0) {
      y = nextLeafY;
      nextLeafY += Y_GAP;
    } else {
      const childYs = node.children.map((c) => place(c, depth + 1));
      y = (Math.min(...childYs) + Math.max(...childYs)) / 2;
    }
    positions.set(id, { x: depth * X_GAP, y });
    return y;
  };

  place(tree.root_id, 0);
  return positions;
}

export interface TreeViewOptions {
  onSelect: (nodeId: string) => void;
}

export class TreeView {
  readonly svg: SVGSVGElement;
  private scene: SVGGElement;
  private panX = 40;
  private panY = 40;
  private zoom = 1;
  private dragging: { startX: number; startY: number; panX: number; panY: number } | null = null;

  constructor(
    container: HTMLElement,
    private options: TreeViewOptions,
  ) {
    this.svg = document.createElementNS(SVG_NS, "svg") as SVGSVGElement;
    this.svg.setAttribute("class", "tree-canvas");
    this.svg.setAttribute("width", "100%");
    this.svg.setAttribute("height", "100%");
    this.scene = document.createElementNS(SVG_NS, "g") as SVGGElement;
    this.svg.appendChild(this.scene);
    container.appendChild(this.svg);

    this.svg.addEventListener("wheel", (event) => {
      event.preventDefault();
      const factor = (event as WheelEvent).deltaY < 0 ? 1.1 : 1 / 1.1;
      this.zoom = Math.min(3, Math.max(0.2, this.zoom * factor));
      this.applyTransform();
    });
    this.svg.addEventListener("mousedown", (event) => {
      const mouse = event as MouseEvent;
      this.dragging = {
        startX: mouse.clientX,
        startY: mouse.clientY,
        panX: this.panX,
        panY: this.panY,
      };
    });
    this.svg.addEventListener("mousemove", (event) => {
      if (!this.dragging) return;
      const mouse = event as MouseEvent;
      this.panX = this.dragging.panX + (mouse.clientX - this.dragging.startX);
      this.panY = this.dragging.panY + (mouse.clientY - this.dragging.startY);
      this.applyTransform();
    });
    for (const kind of ["mouseup", "mouseleave"]) {
      this.svg.addEventListener(kind, () => {
        this.dragging = null;
      });
    }
  }

  private applyTransform(): void {
    this.scene.setAttribute(
      "transform",
      `translate(${this.panX} ${this.panY}) scale(${this.zoom})`,
    );
  }

  render(tree: TreeDoc, selected: string | null, highlights: Set<string>): void {
    while (this.scene.firstChild) this.scene.removeChild(this.scene.firstChild);
    this.applyTransform();
    const positions = layoutTree(tree);
    const nodes = nodeMap(tree);

    for (const node of tree.nodes) {
      if (node.parent_id === null) continue;
      const from = positions.get(node.parent_id)!;
      const to = positions.get(node.id)!;
      const edge = document.createElementNS(SVG_NS, "g");
      edge.setAttribute("class", `edge edge-${node.direction}`);
      edge.setAttribute("data-edge-to", node.id);
      const line = document.createElementNS(SVG_NS, "line");
      line.setAttribute("x1", String(from.x + NODE_W));
      line.setAttribute("y1", String(from.y + NODE_H / 2));
      line.setAttribute("x2", String(to.x));
      line.setAttribute("y2", String(to.y + NODE_H / 2));
      edge.appendChild(line);
      const label = document.createElementNS(SVG_NS, "text");
      label.setAttribute("x", String((from.x + NODE_W + to.x) / 2));
      label.setAttribute("y", String((from.y + to.y + NODE_H) / 2 - 6));
      label.setAttribute("class", "edge-label");
      label.textContent = node.direction === "backward" ? "caused by" : "leads to";
      edge.appendChild(label);
      this.scene.appendChild(edge);
    }

    for (const node of tree.nodes) {
      const at = positions.get(node.id)!;
      const group = document.createElementNS(SVG_NS, "g");
      const classes = ["node", `node-${node.direction}`];
      if (node.id === selected) classes.push("selected");
      if (highlights.has(node.id)) classes.push("highlight");
      group.setAttribute("class", classes.join(" "));
      group.setAttribute("data-node-id", node.id);
      group.setAttribute("transform", `translate(${at.x} ${at.y})`);

      const box = document.createElementNS(SVG_NS, "rect");
      box.setAttribute("width", String(NODE_W));
      box.setAttribute("height", String(NODE_H));
      box.setAttribute("rx", "8");
      group.appendChild(box);

      const text = document.createElementNS(SVG_NS, "text");
      text.setAttribute("x", "8");
      text.setAttribute("y", "20");
      const snippet = node.text.length > 26 ? `${node.text.slice(0, 25)}…` : node.text;
      text.textContent = snippet;
      group.appendChild(text);

      const meta = document.createElementNS(SVG_NS, "text");
      meta.setAttribute("x", "8");
      meta.setAttribute("y", "38");
      meta.setAttribute("class", "node-meta");
      meta.textContent = `${node.id} · ${nodes.get(node.id)!.children.length} child(ren)`;
      group.appendChild(meta);

      group.addEventListener("click", (event) => {
        event.stopPropagation();
        this.options.onSelect(node.id);
      });
      this.scene.appendChild(group);
    }
  }
}
