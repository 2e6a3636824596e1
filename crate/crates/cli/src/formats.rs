//! On-disk formats: datasets, truth files, and chain directories.
//!
//! Every format round-trips exactly. Floating-point values are written
//! with Rust's shortest round-trip `Display`, so write-then-read
//! reproduces the same bit patterns, and writing the same values twice
//! produces byte-identical files.
//!
//! * `Q.csv` — header `a1..aK`, one 0/1 row per item.
//! * `Y.csv` — header `item1..itemJ`, one 0/1 row per examinee.
//! * `truth_alpha.csv` — header `a1..aK`, one 0/1 row per examinee.
//! * `truth_pi.csv` — header `class,probability`, one row per class.
//! * `truth_params.json` — the true item parameters.
//! * chain directories — `chain.json` metadata, one CSV per parameter
//!   family (`guess.csv`/`slip.csv` or `lambda.csv`) and `pi.csv`, each
//!   with a leading `iteration` column, plus the attribute draws as
//!   either `alpha.csv` or packed-bit `alpha.bin` + `alpha.meta.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cdm_core::error::{Error, Result};
use cdm_core::fixtures::{parse_q_csv, q_to_csv};
use cdm_core::model::{class_label, ItemParams, QMatrix, ResponseMatrix};
use cdm_core::samplers::{ChainStore, Method, ModelKind, ParamLayout, RunStats};
use serde::{Deserialize, Serialize};

/// How attribute-profile draws are stored in a chain directory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AlphaFormat {
    /// `alpha.csv`: iteration column plus one integer profile per examinee.
    Csv,
    /// `alpha.bin`: packed bits, described by `alpha.meta.json`.
    Bin,
}

/// Builds a data error that names the offending file.
pub fn data_err(path: &Path, what: impl std::fmt::Display) -> Error {
    Error::data(format!("{}: {what}", path.display()))
}

/// Reads a whole file as UTF-8 text.
pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| data_err(path, e))
}

/// Writes a file in one shot.
pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| data_err(path, e))
}

/// Creates a directory (and its parents) if missing.
pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| data_err(path, e))
}

/// Serializes a value as pretty JSON with a trailing newline.
pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::data(format!("JSON serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Parses JSON read from `path`, reporting the file on failure.
pub fn from_json_file<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_file(path)?).map_err(|e| data_err(path, e))
}

/// Like [`from_json_file`], but for configuration files: any failure —
/// unreadable file or malformed contents — is a usage error, not a data
/// error.
pub fn from_json_config<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// Q-matrix and binary tables
// ---------------------------------------------------------------------------

/// Writes a Q-matrix as `a1..aK`-headed CSV.
pub fn write_q_csv(path: &Path, q: &QMatrix) -> Result<()> {
    write_file(path, q_to_csv(q))
}

/// Reads a Q-matrix from CSV.
pub fn read_q_csv(path: &Path) -> Result<QMatrix> {
    parse_q_csv(&read_file(path)?).map_err(|e| data_err(path, e))
}

/// Writes a 0/1 table with header `{prefix}1..{prefix}C`.
fn write_binary_table<'a>(
    path: &Path,
    prefix: &str,
    n_cols: usize,
    rows: impl Iterator<Item = &'a [u8]>,
) -> Result<()> {
    let mut s = String::new();
    for c in 1..=n_cols {
        if c > 1 {
            s.push(',');
        }
        let _ = write!(s, "{prefix}{c}");
    }
    s.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), n_cols);
        for (c, v) in row.iter().enumerate() {
            if c > 0 {
                s.push(',');
            }
            let _ = write!(s, "{v}");
        }
        s.push('\n');
    }
    write_file(path, s)
}

/// Reads a 0/1 table, validating the `{prefix}1..{prefix}C` header.
fn read_binary_table(path: &Path, prefix: &str) -> Result<Vec<Vec<u8>>> {
    let text = read_file(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| data_err(path, "file is empty"))?;
    for (c, field) in header.split(',').enumerate() {
        let expect = format!("{prefix}{}", c + 1);
        if field != expect {
            return Err(data_err(
                path,
                format!("header column {} is {field:?}, expected {expect:?}", c + 1),
            ));
        }
    }
    let n_cols = header.split(',').count();
    let mut rows = Vec::new();
    for (r, line) in lines.enumerate() {
        let mut row = Vec::with_capacity(n_cols);
        for field in line.split(',') {
            match field {
                "0" => row.push(0),
                "1" => row.push(1),
                other => {
                    return Err(data_err(
                        path,
                        format!("row {}: entry {other:?} is not 0 or 1", r + 1),
                    ))
                }
            }
        }
        if row.len() != n_cols {
            return Err(data_err(
                path,
                format!(
                    "row {} has {} fields, expected {n_cols}",
                    r + 1,
                    row.len()
                ),
            ));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(data_err(path, "table has a header but no rows"));
    }
    Ok(rows)
}

/// Writes a response matrix as `item1..itemJ`-headed CSV.
pub fn write_y_csv(path: &Path, y: &ResponseMatrix) -> Result<()> {
    write_binary_table(
        path,
        "item",
        y.n_items(),
        (0..y.n_examinees()).map(|i| y.row(i)),
    )
}

/// Reads a response matrix from CSV.
pub fn read_y_csv(path: &Path) -> Result<ResponseMatrix> {
    let rows = read_binary_table(path, "item")?;
    ResponseMatrix::new(&rows).map_err(|e| data_err(path, e))
}

/// Writes true attribute profiles as `a1..aK`-headed CSV, one row per
/// examinee.
pub fn write_alpha_truth_csv(path: &Path, alpha: &[u32], n_attrs: usize) -> Result<()> {
    let rows: Vec<Vec<u8>> = alpha
        .iter()
        .map(|&a| (0..n_attrs).map(|k| (a >> k & 1) as u8).collect())
        .collect();
    write_binary_table(path, "a", n_attrs, rows.iter().map(|r| r.as_slice()))
}

/// Reads true attribute profiles; returns the bitmasks and `K`.
pub fn read_alpha_truth_csv(path: &Path) -> Result<(Vec<u32>, usize)> {
    let rows = read_binary_table(path, "a")?;
    let k = rows[0].len();
    if k > 32 {
        return Err(data_err(path, format!("{k} attribute columns exceed 32")));
    }
    let masks = rows
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold(0u32, |m, (kk, &b)| m | (u32::from(b) << kk))
        })
        .collect();
    Ok((masks, k))
}

// ---------------------------------------------------------------------------
// Class distribution and item-parameter truth
// ---------------------------------------------------------------------------

/// Writes a class distribution as `class,probability` CSV with classes
/// labelled `c1..c{2^K}` in profile-bitmask order.
pub fn write_pi_csv(path: &Path, pi: &[f64]) -> Result<()> {
    let mut s = String::from("class,probability\n");
    for (m, p) in pi.iter().enumerate() {
        let _ = writeln!(s, "c{},{p}", class_label(m as u32));
    }
    write_file(path, s)
}

/// Reads a class distribution written by [`write_pi_csv`].
pub fn read_pi_csv(path: &Path) -> Result<Vec<f64>> {
    let text = read_file(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| data_err(path, "file is empty"))?;
    if header != "class,probability" {
        return Err(data_err(
            path,
            format!("header is {header:?}, expected \"class,probability\""),
        ));
    }
    let mut pi = Vec::new();
    for (r, line) in lines.enumerate() {
        let (label, value) = line
            .split_once(',')
            .ok_or_else(|| data_err(path, format!("row {}: missing comma", r + 1)))?;
        let expect = format!("c{}", class_label(r as u32));
        if label != expect {
            return Err(data_err(
                path,
                format!("row {}: class label {label:?}, expected {expect:?}", r + 1),
            ));
        }
        let p: f64 = value
            .parse()
            .map_err(|e| data_err(path, format!("row {}: bad probability: {e}", r + 1)))?;
        pi.push(p);
    }
    if pi.is_empty() {
        return Err(data_err(path, "no class rows"));
    }
    Ok(pi)
}

/// Writes true item parameters as JSON.
pub fn write_params_json(path: &Path, params: &ItemParams) -> Result<()> {
    write_file(path, to_json_pretty(params)?)
}

/// Reads item parameters written by [`write_params_json`].
pub fn read_params_json(path: &Path) -> Result<ItemParams> {
    from_json_file(path)
}

// ---------------------------------------------------------------------------
// Chain directories
// ---------------------------------------------------------------------------

/// Metadata stored beside the draw files of one chain.
///
/// Only the deterministic work counters from [`RunStats`] are persisted;
/// wall-clock time lives in the run manifest, keeping every chain file
/// byte-reproducible.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ChainMeta {
    model: ModelKind,
    method: Method,
    layout: ParamLayout,
    stats: ChainWorkStats,
    alpha_format: AlphaFormat,
}

/// The reproducible subset of [`RunStats`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct ChainWorkStats {
    attr_items_touched: u64,
    attr_updates: u64,
}

/// Dimensions of the packed attribute draws in `alpha.bin`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct AlphaMeta {
    format: String,
    n_kept: usize,
    n_examinees: usize,
    n_attrs: usize,
    iteration_stride_bytes: usize,
    bit_order: String,
}

const ALPHA_BIT_ORDER: &str = "examinee-major: bit i*K+k is attribute k+1 of examinee i+1, \
     least-significant bit first within each byte; every iteration starts on a byte boundary";

fn alpha_stride(n: usize, k: usize) -> usize {
    (n * k).div_ceil(8)
}

fn pack_alpha(alpha: &[u32], n: usize, k: usize, n_kept: usize) -> Vec<u8> {
    let stride = alpha_stride(n, k);
    let mut buf = vec![0u8; stride * n_kept];
    for t in 0..n_kept {
        let base = t * stride;
        for (i, &a) in alpha[t * n..(t + 1) * n].iter().enumerate() {
            for kk in 0..k {
                if a >> kk & 1 == 1 {
                    let b = i * k + kk;
                    buf[base + (b >> 3)] |= 1 << (b & 7);
                }
            }
        }
    }
    buf
}

fn unpack_alpha(buf: &[u8], n: usize, k: usize, n_kept: usize) -> Result<Vec<u32>> {
    let stride = alpha_stride(n, k);
    if buf.len() != stride * n_kept {
        return Err(Error::data(format!(
            "packed attribute data is {} bytes, expected {}",
            buf.len(),
            stride * n_kept
        )));
    }
    let mut alpha = Vec::with_capacity(n * n_kept);
    for t in 0..n_kept {
        let base = t * stride;
        for i in 0..n {
            let mut a = 0u32;
            for kk in 0..k {
                let b = i * k + kk;
                if buf[base + (b >> 3)] >> (b & 7) & 1 == 1 {
                    a |= 1 << kk;
                }
            }
            alpha.push(a);
        }
    }
    Ok(alpha)
}

/// Writes all draw files of one chain into `dir`; returns the file names
/// written (relative to `dir`).
pub fn write_chain_dir(dir: &Path, chain: &ChainStore, alpha_format: AlphaFormat) -> Result<Vec<String>> {
    create_dir(dir)?;
    let mut written = Vec::new();

    let meta = ChainMeta {
        model: chain.model,
        method: chain.method,
        layout: chain.layout.clone(),
        stats: ChainWorkStats {
            attr_items_touched: chain.stats.attr_items_touched,
            attr_updates: chain.stats.attr_updates,
        },
        alpha_format,
    };
    write_file(&dir.join("chain.json"), to_json_pretty(&meta)?)?;
    written.push("chain.json".to_string());

    let p = chain.layout.n_item_params();
    let n_kept = chain.kept_iterations.len();
    for fam in &chain.layout.families {
        let mut s = String::from("iteration");
        for label in &chain.layout.item_labels[fam.start..fam.start + fam.len] {
            s.push(',');
            s.push_str(label);
        }
        s.push('\n');
        for (t, &it) in chain.kept_iterations.iter().enumerate() {
            let _ = write!(s, "{it}");
            for v in &chain.item_draws[t * p + fam.start..t * p + fam.start + fam.len] {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        let name = format!("{}.csv", fam.name);
        write_file(&dir.join(&name), s)?;
        written.push(name);
    }

    let n_classes = chain.layout.n_classes;
    let mut s = String::from("iteration");
    for label in chain.layout.pi_labels() {
        s.push(',');
        s.push_str(&label);
    }
    s.push('\n');
    for (t, &it) in chain.kept_iterations.iter().enumerate() {
        let _ = write!(s, "{it}");
        for v in &chain.pi_draws[t * n_classes..(t + 1) * n_classes] {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    write_file(&dir.join("pi.csv"), s)?;
    written.push("pi.csv".to_string());

    let n = chain.layout.n_examinees;
    match alpha_format {
        AlphaFormat::Csv => {
            let mut s = String::from("iteration");
            for i in 1..=n {
                let _ = write!(s, ",e{i}");
            }
            s.push('\n');
            for (t, &it) in chain.kept_iterations.iter().enumerate() {
                let _ = write!(s, "{it}");
                for a in &chain.alpha_draws[t * n..(t + 1) * n] {
                    let _ = write!(s, ",{a}");
                }
                s.push('\n');
            }
            write_file(&dir.join("alpha.csv"), s)?;
            written.push("alpha.csv".to_string());
        }
        AlphaFormat::Bin => {
            let k = chain.layout.n_attrs;
            let buf = pack_alpha(&chain.alpha_draws, n, k, n_kept);
            write_file(&dir.join("alpha.bin"), &buf)?;
            let meta = AlphaMeta {
                format: "packed-bits".to_string(),
                n_kept,
                n_examinees: n,
                n_attrs: k,
                iteration_stride_bytes: alpha_stride(n, k),
                bit_order: ALPHA_BIT_ORDER.to_string(),
            };
            write_file(&dir.join("alpha.meta.json"), to_json_pretty(&meta)?)?;
            written.push("alpha.bin".to_string());
            written.push("alpha.meta.json".to_string());
        }
    }

    Ok(written)
}

/// Reads one series CSV (`iteration` column plus the given value labels).
fn read_series_csv(path: &Path, labels: &[String]) -> Result<(Vec<usize>, Vec<f64>)> {
    let text = read_file(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| data_err(path, "file is empty"))?;
    let mut fields = header.split(',');
    if fields.next() != Some("iteration") {
        return Err(data_err(path, "first header column must be \"iteration\""));
    }
    for (c, label) in labels.iter().enumerate() {
        match fields.next() {
            Some(f) if f == label => {}
            other => {
                return Err(data_err(
                    path,
                    format!(
                        "header column {} is {other:?}, expected {label:?}",
                        c + 2
                    ),
                ))
            }
        }
    }
    if let Some(extra) = fields.next() {
        return Err(data_err(path, format!("unexpected extra column {extra:?}")));
    }

    let mut iterations = Vec::new();
    let mut values = Vec::new();
    for (r, line) in lines.enumerate() {
        let mut fields = line.split(',');
        let it: usize = fields
            .next()
            .unwrap_or("")
            .parse()
            .map_err(|e| data_err(path, format!("row {}: bad iteration: {e}", r + 1)))?;
        iterations.push(it);
        let mut count = 0usize;
        for field in fields {
            let v: f64 = field
                .parse()
                .map_err(|e| data_err(path, format!("row {}: bad value: {e}", r + 1)))?;
            values.push(v);
            count += 1;
        }
        if count != labels.len() {
            return Err(data_err(
                path,
                format!(
                    "row {} has {count} values, expected {}",
                    r + 1,
                    labels.len()
                ),
            ));
        }
    }
    Ok((iterations, values))
}

/// Reads a chain directory back into a [`ChainStore`].
pub fn read_chain_dir(dir: &Path) -> Result<ChainStore> {
    let meta: ChainMeta = from_json_file(&dir.join("chain.json"))?;
    let layout = meta.layout;
    let p = layout.n_item_params();

    let (kept_iterations, pi_draws) = read_series_csv(&dir.join("pi.csv"), &layout.pi_labels())?;
    let n_kept = kept_iterations.len();

    let mut item_draws = vec![0.0f64; n_kept * p];
    for fam in &layout.families {
        let labels = layout.item_labels[fam.start..fam.start + fam.len].to_vec();
        let path = dir.join(format!("{}.csv", fam.name));
        let (its, vals) = read_series_csv(&path, &labels)?;
        if its != kept_iterations {
            return Err(data_err(
                &path,
                "iteration column disagrees with pi.csv",
            ));
        }
        for t in 0..n_kept {
            item_draws[t * p + fam.start..t * p + fam.start + fam.len]
                .copy_from_slice(&vals[t * fam.len..(t + 1) * fam.len]);
        }
    }

    let n = layout.n_examinees;
    let k = layout.n_attrs;
    let alpha_draws = match meta.alpha_format {
        AlphaFormat::Csv => {
            let path = dir.join("alpha.csv");
            let labels: Vec<String> = (1..=n).map(|i| format!("e{i}")).collect();
            let (its, vals) = read_series_csv(&path, &labels)?;
            if its != kept_iterations {
                return Err(data_err(&path, "iteration column disagrees with pi.csv"));
            }
            vals.iter()
                .map(|&v| {
                    if v.fract() == 0.0 && (0.0..(1u64 << k) as f64).contains(&v) {
                        Ok(v as u32)
                    } else {
                        Err(data_err(
                            &path,
                            format!("profile value {v} is not an integer in [0, 2^{k})"),
                        ))
                    }
                })
                .collect::<Result<Vec<u32>>>()?
        }
        AlphaFormat::Bin => {
            let meta_path = dir.join("alpha.meta.json");
            let am: AlphaMeta = from_json_file(&meta_path)?;
            if am.n_examinees != n || am.n_attrs != k || am.n_kept != n_kept {
                return Err(data_err(
                    &meta_path,
                    format!(
                        "dimensions {}×{}×{} disagree with the chain ({n_kept}×{n}×{k})",
                        am.n_kept, am.n_examinees, am.n_attrs
                    ),
                ));
            }
            let bin_path = dir.join("alpha.bin");
            let buf = fs::read(&bin_path).map_err(|e| data_err(&bin_path, e))?;
            unpack_alpha(&buf, n, k, n_kept).map_err(|e| data_err(&bin_path, e))?
        }
    };

    Ok(ChainStore {
        model: meta.model,
        method: meta.method,
        layout,
        kept_iterations,
        item_draws,
        pi_draws,
        alpha_draws,
        stats: RunStats {
            attr_items_touched: meta.stats.attr_items_touched,
            attr_updates: meta.stats.attr_updates,
            // Wall-clock time is not an artifact; the run manifest has it.
            seconds: 0.0,
        },
    })
}
