/* DOM rendering for the data view.

   Everything on screen is a direct projection of engine payloads held in
   DataViewState. Color semantics are fixed by CSS class:
     relevant → purple family   (columns the current statement touches)
     preview  → yellow family   (candidate result column)
     deleted  → red family      (rows a filter would drop)
     changed / matched → bold   (cells a preview alters or literals it hit)

   Two consecutive renders of identical state leave the DOM untouched
   (no flicker), and rebuilding a card preserves its horizontal scroll. */

import {
  DataViewState,
  SAMPLE_GRID_ROWS,
  anchoredColumns,
  highlightedColumns,
  isExpanded,
  showsSampleRows,
} from "./dataView.js";
import {
  ColumnProfile,
  PreviewColumnDiff,
  PreviewRowFilter,
  PreviewTablePair,
  RowSample,
  TableEntry,
} from "./protocol.js";

const renderKeys = new WeakMap<HTMLElement, string>();

export function renderDataView(root: HTMLElement, state: DataViewState): void {
  const key = renderKey(state);
  if (renderKeys.get(root) === key) return; // identical update: leave the DOM alone
  renderKeys.set(root, key);

  const scrollByTable = captureScroll(root);
  root.textContent = "";

  root.appendChild(renderAnchoredStrip(state));

  if (state.preview !== null && !state.preview.ok) {
    const banner = document.createElement("div");
    banner.className = "error-banner panel-banner";
    banner.textContent = `preview unavailable (${state.preview.error_tag}): ${state.preview.error}`;
    root.appendChild(banner);
  }
  if (state.highlight !== null && state.highlight.missing_names.length > 0) {
    const missing = document.createElement("div");
    missing.className = "missing-names panel-banner";
    missing.textContent = `unknown names: ${state.highlight.missing_names.join(", ")}`;
    root.appendChild(missing);
  }

  for (const entry of state.entries) {
    root.appendChild(renderCard(entry, state));
  }

  restoreScroll(root, scrollByTable);
}

function renderKey(state: DataViewState): string {
  return JSON.stringify({
    entries: state.entries,
    expanded: [...state.expanded].sort(),
    highlight: state.highlight,
    preview: state.preview,
    previewTable: state.previewTable,
  });
}

// --- anchored strip -----------------------------------------------------------

function renderAnchoredStrip(state: DataViewState): HTMLElement {
  const strip = document.createElement("div");
  strip.className = "anchored-strip";
  for (const [table, column] of anchoredColumns(state)) {
    const chip = document.createElement("span");
    chip.className = "anchored-chip relevant";
    chip.dataset.table = table;
    chip.dataset.column = column;
    chip.textContent = `${table}.${column}`;
    strip.appendChild(chip);
  }
  return strip;
}

// --- table cards ---------------------------------------------------------------

function renderCard(entry: TableEntry, state: DataViewState): HTMLElement {
  const name = entry.table.name;
  const expanded = isExpanded(state, name);
  const card = document.createElement("div");
  card.className = `table-card ${expanded ? "expanded" : "collapsed"}`;
  card.dataset.table = name;

  const header = document.createElement("div");
  header.className = "card-header";
  const caret = document.createElement("span");
  caret.className = "caret";
  caret.textContent = expanded ? "▾" : "▸";
  const title = document.createElement("span");
  title.className = "card-title";
  title.textContent = name;
  const shape = document.createElement("span");
  shape.className = "card-shape";
  shape.textContent = `${entry.table.shape[0]} × ${entry.table.shape[1]}`;
  header.append(caret, title, shape);
  card.appendChild(header);

  if (!expanded) return card;

  const body = document.createElement("div");
  body.className = "card-body";
  const relevant = highlightedColumns(state, name);
  body.appendChild(renderSchemaGrid(entry.columns, relevant));

  if (showsSampleRows(state, name)) {
    const preview = state.previewTable === name ? state.preview : null;
    const scroll = document.createElement("div");
    scroll.className = "grid-scroll";
    scroll.appendChild(
      renderSampleGrid(
        entry.rows,
        relevant,
        preview !== null && preview.ok && preview.form === "column_diff" ? preview : null,
        preview !== null && preview.ok && preview.form === "row_filter" ? preview : null,
      ),
    );
    body.appendChild(scroll);

    if (preview !== null && preview.ok && preview.form === "row_filter") {
      body.appendChild(renderFilterSummary(preview));
    }
    if (preview !== null && preview.ok && preview.form === "table_pair") {
      body.appendChild(renderPairResult(preview));
    }
  }

  card.appendChild(body);
  return card;
}

function renderSchemaGrid(columns: ColumnProfile[], relevant: Set<string>): HTMLElement {
  const grid = document.createElement("table");
  grid.className = "schema-grid";
  for (const col of columns) {
    const row = document.createElement("tr");
    row.className = relevant.has(col.name) ? "schema-row relevant" : "schema-row";
    row.dataset.column = col.name;
    const name = document.createElement("td");
    name.className = "schema-name";
    name.textContent = col.name;
    const dtype = document.createElement("td");
    dtype.className = "schema-dtype";
    dtype.textContent = col.dtype;
    const meta = document.createElement("td");
    meta.className = "schema-meta";
    meta.textContent = schemaMeta(col);
    row.append(name, dtype, meta);
    grid.appendChild(row);
  }
  return grid;
}

function schemaMeta(col: ColumnProfile): string {
  const parts = [`${col.cardinality} uniq`, `${col.null_count} null`];
  if (col.sortedness !== "none") parts.push(col.sortedness);
  if (col.value_format !== undefined) parts.push(col.value_format);
  return parts.join(" · ");
}

// --- sample grid (with preview overlays) --------------------------------------

function renderSampleGrid(
  sample: RowSample,
  relevant: Set<string>,
  columnDiff: PreviewColumnDiff | null,
  rowFilter: PreviewRowFilter | null,
): HTMLElement {
  const grid = document.createElement("table");
  grid.className = "sample-grid";
  const rows = sample.rows.slice(0, SAMPLE_GRID_ROWS);
  // the preview column slots in immediately right of the column it rewrites
  const diffAt = columnDiff !== null ? sample.columns.indexOf(columnDiff.column) : -1;
  const deleted = rowFilter !== null ? new Set(rowFilter.deleted_rows) : new Set<number>();
  const matched = rowFilter !== null ? rowFilter.matched_literals : [];

  const thead = document.createElement("thead");
  const headRow = document.createElement("tr");
  sample.columns.forEach((column, i) => {
    const th = document.createElement("th");
    th.className = relevant.has(column) ? "relevant" : "";
    th.dataset.column = column;
    th.textContent = column;
    headRow.appendChild(th);
    if (i === diffAt && columnDiff !== null) {
      const preview = document.createElement("th");
      preview.className = "preview";
      preview.dataset.column = columnDiff.new_column;
      preview.textContent = columnDiff.new_column;
      headRow.appendChild(preview);
    }
  });
  thead.appendChild(headRow);
  grid.appendChild(thead);

  const tbody = document.createElement("tbody");
  rows.forEach((values, rowIndex) => {
    const tr = document.createElement("tr");
    tr.className = deleted.has(rowIndex) ? "sample-row deleted" : "sample-row";
    values.forEach((value, i) => {
      const td = document.createElement("td");
      writeCell(td, value);
      const column = sample.columns[i];
      if (relevant.has(column ?? "")) td.classList.add("relevant");
      if (literalMatches(matched, column ?? "", value)) td.classList.add("matched");
      tr.appendChild(td);
      if (i === diffAt && columnDiff !== null) {
        const preview = document.createElement("td");
        preview.className = "preview";
        writeCell(preview, columnDiff.new_values[rowIndex]);
        if (columnDiff.changed_mask[rowIndex]) preview.classList.add("changed");
        tr.appendChild(preview);
      }
    });
    tbody.appendChild(tr);
  });
  grid.appendChild(tbody);
  return grid;
}

function literalMatches(
  literals: [string | null, unknown][],
  column: string,
  value: unknown,
): boolean {
  return literals.some(([col, lit]) => (col === null || col === column) && lit === value);
}

function writeCell(td: HTMLElement, value: unknown): void {
  if (value === null || value === undefined) {
    td.classList.add("null");
    td.textContent = "";
  } else {
    td.textContent = String(value);
  }
}

function renderFilterSummary(preview: PreviewRowFilter): HTMLElement {
  const summary = document.createElement("div");
  summary.className = "filter-summary";
  const visible = preview.deleted_rows.filter((i) => i < SAMPLE_GRID_ROWS).length;
  const total = preview.deleted_rows.length;
  summary.textContent =
    total === visible
      ? `${total} row${total === 1 ? "" : "s"} deleted`
      : `${total} rows deleted (${visible} in view)`;
  return summary;
}

function renderPairResult(preview: PreviewTablePair): HTMLElement {
  const block = document.createElement("div");
  block.className = "pair-result";
  const label = document.createElement("div");
  label.className = "pair-label";
  label.textContent = "result";
  block.appendChild(label);
  const scroll = document.createElement("div");
  scroll.className = "grid-scroll";
  scroll.appendChild(renderSampleGrid(preview.result, new Set(), null, null));
  block.appendChild(scroll);
  return block;
}

// --- scroll preservation --------------------------------------------------------

function captureScroll(root: HTMLElement): Map<string, number> {
  const positions = new Map<string, number>();
  for (const el of root.querySelectorAll<HTMLElement>(".table-card")) {
    const scroll = el.querySelector<HTMLElement>(".grid-scroll");
    const name = el.dataset.table;
    if (scroll !== null && name !== undefined && scroll.scrollLeft > 0) {
      positions.set(name, scroll.scrollLeft);
    }
  }
  return positions;
}

function restoreScroll(root: HTMLElement, positions: Map<string, number>): void {
  if (positions.size === 0) return;
  for (const el of root.querySelectorAll<HTMLElement>(".table-card")) {
    const name = el.dataset.table;
    if (name === undefined) continue;
    const left = positions.get(name);
    if (left === undefined) continue;
    const scroll = el.querySelector<HTMLElement>(".grid-scroll");
    if (scroll !== null) scroll.scrollLeft = left;
  }
}
