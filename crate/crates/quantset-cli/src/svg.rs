//! The `svg` command: render a 2-D grid CSV as a filled membership region
//! with a marching-squares zero contour, plus optional overlays.
//!
//! Input grids come from the `grid` command (header `x1,x2,p_value,member`,
//! rows odometer-ordered with the second axis fastest). The base grid is
//! drawn as a light filled region with a dark contour; each `--overlay`
//! grid is drawn on top in its own color and a progressively lighter
//! opacity so nested approximations remain distinguishable. Output is
//! deterministic for identical inputs: fixed iteration order, fixed float
//! formatting, no timestamps.
//!
//! Only two-variable grids are accepted; anything else is rejected before
//! any drawing happens.

use anyhow::{bail, Context};
use clap::Args;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Args, Debug)]
pub struct SvgArgs {
    /// Base grid CSV (from the `grid` command).
    #[arg(long)]
    pub grid: PathBuf,
    /// Additional grid CSVs drawn on top, each with its own opacity.
    #[arg(long = "overlay")]
    pub overlays: Vec<PathBuf>,
    /// Output SVG path.
    #[arg(long)]
    pub out: PathBuf,
}

/// A parsed 2-D tensor grid: `value[i * ys.len() + j]` belongs to the
/// point `(xs[i], ys[j])`.
#[derive(Debug)]
pub struct GridData {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub value: Vec<f64>,
    pub member: Vec<bool>,
}

impl GridData {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.value[i * self.ys.len() + j]
    }

    fn is_member(&self, i: usize, j: usize) -> bool {
        self.member[i * self.ys.len() + j]
    }
}

/// Parses a grid CSV, rejecting anything that is not a 2-D tensor grid in
/// writer order.
pub fn parse_grid(text: &str, source: &Path) -> anyhow::Result<GridData> {
    let mut lines = text.lines();
    let header = lines.next().context("empty grid file")?;
    let columns: Vec<&str> = header.split(',').collect();
    let coord_columns = columns.len().saturating_sub(2);
    if columns.last() != Some(&"member") || columns.get(coord_columns) != Some(&"p_value") {
        bail!("{}: expected header `x1,...,xn,p_value,member`, got {header:?}", source.display());
    }
    if coord_columns != 2 {
        bail!(
            "{}: svg rendering needs a 2-D grid, this one has {} coordinate column(s)",
            source.display(),
            coord_columns
        );
    }

    let mut rows = Vec::new();
    for (line_no, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            bail!("{}: row {} has {} fields, expected 4", source.display(), line_no + 2, fields.len());
        }
        let parse = |f: &str| -> anyhow::Result<f64> {
            f.parse::<f64>().with_context(|| format!("{}: row {}", source.display(), line_no + 2))
        };
        rows.push((parse(fields[0])?, parse(fields[1])?, parse(fields[2])?, fields[3] == "1"));
    }
    if rows.is_empty() {
        bail!("{}: no data rows", source.display());
    }

    // The writer emits the second axis fastest: y runs through its values
    // while x stays put, so the y axis length is the first index at which
    // x changes.
    let ny = rows.iter().position(|r| r.0 != rows[0].0).unwrap_or(rows.len());
    if rows.len() % ny != 0 {
        bail!("{}: {} rows do not tile into columns of {ny}", source.display(), rows.len());
    }
    let nx = rows.len() / ny;
    let xs: Vec<f64> = (0..nx).map(|i| rows[i * ny].0).collect();
    let ys: Vec<f64> = (0..ny).map(|j| rows[j].1).collect();
    if nx < 2 || ny < 2 {
        bail!("{}: grid must be at least 2x2, got {nx}x{ny}", source.display());
    }
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            let row = &rows[i * ny + j];
            if row.0 != x || row.1 != y {
                bail!("{}: rows are not in tensor order near row {}", source.display(), i * ny + j + 2);
            }
        }
    }
    if !xs.windows(2).all(|w| w[0] < w[1]) || !ys.windows(2).all(|w| w[0] < w[1]) {
        bail!("{}: grid coordinates must be strictly increasing", source.display());
    }
    Ok(GridData {
        xs,
        ys,
        value: rows.iter().map(|r| r.2).collect(),
        member: rows.iter().map(|r| r.3).collect(),
    })
}

/// Where the zero level crosses the edge from `(a, va)` to `(b, vb)`.
fn crossing(a: f64, b: f64, va: f64, vb: f64) -> f64 {
    if va == vb {
        return (a + b) / 2.0;
    }
    let t = (va / (va - vb)).clamp(0.0, 1.0);
    a + t * (b - a)
}

/// Marching-squares zero contour of `p`, as world-coordinate segments
/// `[x_start, y_start, x_end, y_end]`. Saddle cells are disambiguated by
/// the mean of the four corner values.
pub fn contour_segments(grid: &GridData) -> Vec<[f64; 4]> {
    let mut segments = Vec::new();
    for i in 0..grid.xs.len() - 1 {
        for j in 0..grid.ys.len() - 1 {
            let (x0, x1) = (grid.xs[i], grid.xs[i + 1]);
            let (y0, y1) = (grid.ys[j], grid.ys[j + 1]);
            let v00 = grid.at(i, j); // south-west
            let v10 = grid.at(i + 1, j); // south-east
            let v11 = grid.at(i + 1, j + 1); // north-east
            let v01 = grid.at(i, j + 1); // north-west
            let inside = |v: f64| v <= 0.0;
            let case = usize::from(inside(v00))
                | usize::from(inside(v10)) << 1
                | usize::from(inside(v11)) << 2
                | usize::from(inside(v01)) << 3;
            if case == 0 || case == 15 {
                continue;
            }
            let bottom = [crossing(x0, x1, v00, v10), y0];
            let top = [crossing(x0, x1, v01, v11), y1];
            let left = [x0, crossing(y0, y1, v00, v01)];
            let right = [x1, crossing(y0, y1, v10, v11)];
            let mut push = |a: [f64; 2], b: [f64; 2]| segments.push([a[0], a[1], b[0], b[1]]);
            match case {
                1 => push(left, bottom),
                2 => push(bottom, right),
                3 => push(left, right),
                4 => push(right, top),
                5 => {
                    // Saddle: south-west and north-east are inside.
                    if inside((v00 + v10 + v01 + v11) / 4.0) {
                        push(left, top);
                        push(bottom, right);
                    } else {
                        push(left, bottom);
                        push(right, top);
                    }
                }
                6 => push(bottom, top),
                7 => push(left, top),
                8 => push(top, left),
                9 => push(bottom, top),
                10 => {
                    // Saddle: south-east and north-west are inside.
                    if inside((v00 + v10 + v01 + v11) / 4.0) {
                        push(left, bottom);
                        push(right, top);
                    } else {
                        push(bottom, right);
                        push(top, left);
                    }
                }
                11 => push(right, top),
                12 => push(left, right),
                13 => push(bottom, right),
                14 => push(left, bottom),
                _ => unreachable!("case index is four bits"),
            }
        }
    }
    segments
}

/// Filled cells (all four corners members), merged into rectangles along
/// the y axis: `[x, y, width, height]`.
pub fn fill_rects(grid: &GridData) -> Vec<[f64; 4]> {
    let mut rects = Vec::new();
    for i in 0..grid.xs.len() - 1 {
        let mut run_start: Option<usize> = None;
        for j in 0..grid.ys.len() - 1 {
            let filled = grid.is_member(i, j)
                && grid.is_member(i + 1, j)
                && grid.is_member(i, j + 1)
                && grid.is_member(i + 1, j + 1);
            match (filled, run_start) {
                (true, None) => run_start = Some(j),
                (false, Some(start)) => {
                    rects.push(run_rect(grid, i, start, j));
                    run_start = None;
                }
                _ => {}
            }
        }
        if let Some(start) = run_start {
            rects.push(run_rect(grid, i, start, grid.ys.len() - 1));
        }
    }
    rects
}

fn run_rect(grid: &GridData, i: usize, j_start: usize, j_end: usize) -> [f64; 4] {
    [
        grid.xs[i],
        grid.ys[j_start],
        grid.xs[i + 1] - grid.xs[i],
        grid.ys[j_end] - grid.ys[j_start],
    ]
}

/// Layer colors: the base grid first, then overlays in order.
const LAYER_COLORS: [&str; 5] = ["#9aa5b1", "#5b8dd6", "#d65b5b", "#5bd68d", "#d6a65b"];

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

fn render_layer(svg: &mut String, grid: &GridData, layer: usize) {
    let color = LAYER_COLORS[layer % LAYER_COLORS.len()];
    let opacity = 0.55 * 0.75f64.powi(i32::try_from(layer).unwrap_or(i32::MAX));
    let _ = writeln!(svg, r#"  <g fill="{color}" fill-opacity="{}" stroke="none">"#, fmt(opacity));
    for [x, y, w, h] in fill_rects(grid) {
        let _ = writeln!(
            svg,
            r#"    <rect x="{}" y="{}" width="{}" height="{}"/>"#,
            fmt(x),
            fmt(y),
            fmt(w),
            fmt(h)
        );
    }
    let _ = writeln!(svg, "  </g>");
    let span = (grid.xs[grid.xs.len() - 1] - grid.xs[0]).max(grid.ys[grid.ys.len() - 1] - grid.ys[0]);
    let _ = writeln!(
        svg,
        r#"  <g stroke="{color}" stroke-width="{}" fill="none" stroke-linecap="round">"#,
        fmt(span / 200.0)
    );
    for [ax, ay, bx, by] in contour_segments(grid) {
        let _ = writeln!(
            svg,
            r#"    <line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
            fmt(ax),
            fmt(ay),
            fmt(bx),
            fmt(by)
        );
    }
    let _ = writeln!(svg, "  </g>");
}

/// Renders the base grid plus overlays into a complete SVG document.
pub fn render(grids: &[GridData]) -> String {
    let base = &grids[0];
    let (x0, x1) = (base.xs[0], base.xs[base.xs.len() - 1]);
    let (y0, y1) = (base.ys[0], base.ys[base.ys.len() - 1]);
    let (w, h) = (x1 - x0, y1 - y0);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="480" height="{}">"#,
        fmt(x0),
        fmt(y0),
        fmt(w),
        fmt(h),
        fmt(480.0 * h / w)
    );
    // World coordinates have y pointing up; SVG has y pointing down.
    let _ = writeln!(svg, r#" <g transform="matrix(1 0 0 -1 0 {})">"#, fmt(y0 + y1));
    for (layer, grid) in grids.iter().enumerate() {
        render_layer(&mut svg, grid, layer);
    }
    let _ = writeln!(svg, " </g>");
    let _ = writeln!(svg, "</svg>");
    svg
}

pub fn run(args: &SvgArgs) -> anyhow::Result<ExitCode> {
    let mut grids = Vec::with_capacity(1 + args.overlays.len());
    for path in std::iter::once(&args.grid).chain(&args.overlays) {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading grid {}", path.display()))?;
        grids.push(parse_grid(&text, path)?);
    }
    let svg = render(&grids);
    std::fs::write(&args.out, svg).with_context(|| format!("writing {}", args.out.display()))?;
    println!("svg: {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}
