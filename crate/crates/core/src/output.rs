//! Artifact writing: atomic files, CSV tables, JSON documents, run
//! manifests, grid snapshots and small static SVG line plots.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::grid::GridField;

/// `git describe` of the source tree at build time, when available.
pub const GIT_DESCRIBE: &str = match option_env!("KRAICHNAN_GIT_DESCRIBE") {
    Some(s) => s,
    None => "unknown",
};

/// Writes `bytes` to `path` through a temporary sibling and a rename, so
/// readers never observe a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Serializes `rows` as CSV with a header derived from the row type.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    write_atomic(path, &bytes)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub git_describe: &'static str,
    pub subcommand: &'a str,
    pub seed: Option<u64>,
    pub config: &'a C,
    pub params: serde_json::Value,
    pub outputs: Vec<String>,
}

impl<'a, C: Serialize> Manifest<'a, C> {
    pub fn new(subcommand: &'a str, config: &'a C, seed: Option<u64>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            git_describe: GIT_DESCRIBE,
            subcommand,
            seed,
            config,
            params: serde_json::Value::Null,
            outputs: Vec::new(),
        }
    }
}

/// Text grid dump: one JSON header line `{n, d, t, params}` followed by one
/// row of values per line (last axis along the row).
pub fn write_snapshot(
    path: &Path,
    field: &GridField,
    t: f64,
    params: &serde_json::Value,
) -> Result<()> {
    let grid = field.grid();
    let header = serde_json::json!({ "n": grid.n, "d": grid.d, "t": t, "params": params });
    let mut out = serde_json::to_string(&header)?;
    out.push('\n');
    for row in field.values().chunks(grid.n) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Reads a file written by [`write_snapshot`].
pub fn read_snapshot(path: &Path) -> Result<(serde_json::Value, GridField)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header: serde_json::Value = serde_json::from_str(lines.next().unwrap_or("{}"))?;
    let n = header["n"].as_u64().unwrap_or(0) as usize;
    let d = header["d"].as_u64().unwrap_or(0) as usize;
    let grid = crate::grid::Grid::new(n, d)?;
    let values = lines
        .flat_map(|l| l.split_whitespace())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| crate::Error::Degenerate(format!("bad snapshot value `{s}`: {e}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((header, GridField::from_values(grid, values)?))
}

/// One curve of a line plot.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// Static SVG line plot. With `log_y`, non-positive values are dropped.
pub fn svg_line_plot(
    series: &[Series],
    title: &str,
    xlabel: &str,
    ylabel: &str,
    log_y: bool,
) -> String {
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (70.0, 20.0, 40.0, 50.0);
    let ty = |y: f64| if log_y { y.log10() } else { y };
    let pts: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            s.points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite() && (!log_y || p.1 > 0.0))
                .map(|&(x, y)| (x, ty(y)))
                .collect()
        })
        .collect();
    let all = pts.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * (w - left - right);
    let sy = |y: f64| top + (y1 - y) / (y1 - y0) * (h - top - bottom);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        w / 2.0,
        escape(title)
    );
    svg.push_str(&format!(
        "<rect x=\"{left}\" y=\"{top}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n",
        w - left - right,
        h - top - bottom
    ));
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let ylabel_txt = if log_y {
            format!("1e{fy:.1}")
        } else {
            format!("{fy:.3}")
        };
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{fx:.3}</text>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{ylabel_txt}</text>\n",
            sx(fx),
            h - bottom + 18.0,
            left - 6.0,
            sy(fy) + 4.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>\n",
        left + (w - left - right) / 2.0,
        h - 12.0,
        escape(xlabel),
        top + (h - top - bottom) / 2.0,
        top + (h - top - bottom) / 2.0,
        escape(ylabel)
    ));
    for (i, (s, p)) in series.iter().zip(&pts).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if p.len() > 1 {
            let path: Vec<String> = p
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            svg.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                path.join(" ")
            ));
        } else if let Some(&(x, y)) = p.first() {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                sx(x),
                sy(y)
            ));
        }
        let ly = top + 16.0 + 16.0 * i as f64;
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n",
            w - right - 150.0,
            w - right - 130.0,
            w - right - 125.0,
            ly + 4.0,
            escape(&s.label)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Artifact directory with bookkeeping of what was written into it.
#[derive(Debug, Clone)]
pub struct ArtifactDir {
    root: PathBuf,
    written: Vec<String>,
}

impl ArtifactDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self {
            root,
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    fn record(&mut self, name: &str) {
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        write_csv(&self.path(name), rows)?;
        self.record(name);
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        write_json(&self.path(name), value)?;
        self.record(name);
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        write_atomic(&self.path(name), body.as_bytes())?;
        self.record(name);
        Ok(())
    }

    pub fn snapshot(
        &mut self,
        name: &str,
        field: &GridField,
        t: f64,
        params: &serde_json::Value,
    ) -> Result<()> {
        write_snapshot(&self.path(name), field, t, params)?;
        self.record(name);
        Ok(())
    }
}
