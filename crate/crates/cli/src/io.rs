//! CSV input/output for the CLI: anchors, measurements, and fingerprint
//! databases.

use std::path::Path;

use anyhow::{bail, Context, Result};

use pulsefix_core::positioning::{Anchor, Measurement, MeasurementKind, Point};
use pulsefix_core::TrainingSet;

/// Write `content` to `<dir>/<name>` when a directory is given, otherwise to
/// stdout.
pub fn emit(dir: Option<&Path>, name: &str, content: &str) -> Result<()> {
    match dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(name);
            std::fs::write(&path, content)
                .with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{content}"),
    }
    Ok(())
}

/// Anchor CSV: `id,x,y,tdoa_reference` (header required; the reference flag
/// is optional and defaults to false).
pub fn read_anchors(path: &Path) -> Result<Vec<Anchor<f64>>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("reading anchors from {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(id_col), Some(x_col), Some(y_col)) = (col("id"), col("x"), col("y")) else {
        bail!("anchor CSV needs id,x,y columns, got: {}", headers.iter().collect::<Vec<_>>().join(","));
    };
    let ref_col = col("tdoa_reference");

    let mut anchors = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let field = |c: usize| record.get(c).unwrap_or("").trim();
        let x: f64 = field(x_col).parse().with_context(|| format!("anchor row {line}: x"))?;
        let y: f64 = field(y_col).parse().with_context(|| format!("anchor row {line}: y"))?;
        let is_ref = ref_col
            .map(|c| matches!(field(c), "true" | "1" | "yes"))
            .unwrap_or(false);
        anchors.push(Anchor {
            id: field(id_col).to_string(),
            position: Point::new(x, y),
            is_tdoa_reference: is_ref,
        });
    }
    if anchors.is_empty() {
        bail!("anchor CSV {} holds no rows", path.display());
    }
    Ok(anchors)
}

/// Measurement CSV: `kind,anchor_id,ref_anchor_id,value,variance`; the
/// reference id may be empty except for TDOA rows that rely on it.
pub fn read_measurements(path: &Path) -> Result<Vec<Measurement<f64>>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("reading measurements from {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("measurement CSV needs a `{name}` column"))
    };
    let kind_col = col("kind")?;
    let anchor_col = col("anchor_id")?;
    let ref_col = headers.iter().position(|h| h == "ref_anchor_id");
    let value_col = col("value")?;
    let var_col = col("variance")?;

    let mut measurements = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let field = |c: usize| record.get(c).unwrap_or("").trim();
        let kind = match field(kind_col) {
            "toa_range" => MeasurementKind::ToaRange,
            "rss_range" => MeasurementKind::RssRange,
            "aoa" => MeasurementKind::Aoa,
            "tdoa_range" => MeasurementKind::TdoaRange,
            other => bail!(
                "measurement row {line}: unknown kind `{other}` (expected toa_range, rss_range, aoa, tdoa_range)"
            ),
        };
        let value: f64 =
            field(value_col).parse().with_context(|| format!("measurement row {line}: value"))?;
        let variance: f64 = field(var_col)
            .parse()
            .with_context(|| format!("measurement row {line}: variance"))?;
        let ref_anchor_id = ref_col
            .map(|c| field(c))
            .filter(|s| !s.is_empty())
            .map(str::to_string);
        measurements.push(Measurement {
            kind,
            anchor_id: field(anchor_col).to_string(),
            ref_anchor_id,
            value,
            variance,
        });
    }
    if measurements.is_empty() {
        bail!("measurement CSV {} holds no rows", path.display());
    }
    Ok(measurements)
}

/// One value per anchor, in anchor order, picked from measurements whose
/// kind satisfies `accept`.
pub fn per_anchor_values(
    anchors: &[Anchor<f64>],
    measurements: &[Measurement<f64>],
    accept: impl Fn(MeasurementKind) -> bool,
) -> Result<Vec<f64>> {
    anchors
        .iter()
        .map(|a| {
            measurements
                .iter()
                .find(|m| m.anchor_id == a.id && accept(m.kind))
                .map(|m| m.value)
                .with_context(|| format!("no suitable measurement for anchor {}", a.id))
        })
        .collect()
}

/// Training CSV: `x,y,<one column per anchor id>`.
pub fn training_csv(training: &TrainingSet, anchor_ids: &[String]) -> String {
    let mut out = String::from("x,y");
    for id in anchor_ids {
        out.push(',');
        out.push_str(id);
    }
    out.push('\n');
    for (vector, location) in training.entries() {
        out.push_str(&format!("{},{}", location.x, location.y));
        for v in vector {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

/// Read a training CSV back into a [`TrainingSet`]; returns the measurement
/// column names as well.
pub fn read_training(path: &Path) -> Result<(TrainingSet, Vec<String>)> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("reading training set from {}", path.display()))?;
    let headers = reader.headers()?.clone();
    if headers.len() < 3 || headers.get(0) != Some("x") || headers.get(1) != Some("y") {
        bail!("training CSV needs columns x,y followed by measurement columns");
    }
    let ids: Vec<String> = headers.iter().skip(2).map(str::to_string).collect();

    let mut training = TrainingSet::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let mut values = record.iter().map(str::trim);
        let x: f64 = values
            .next()
            .unwrap_or("")
            .parse()
            .with_context(|| format!("training row {line}: x"))?;
        let y: f64 = values
            .next()
            .unwrap_or("")
            .parse()
            .with_context(|| format!("training row {line}: y"))?;
        let vector: Vec<f64> = values
            .map(|v| v.parse::<f64>().with_context(|| format!("training row {line}")))
            .collect::<Result<_>>()?;
        training.push(vector, Point::new(x, y))?;
    }
    if training.is_empty() {
        bail!("training CSV {} holds no rows", path.display());
    }
    Ok((training, ids))
}

/// Query CSV: one measurement vector per row, `dim` numeric columns (a
/// non-numeric header row is skipped automatically).
pub fn read_queries(path: &Path, dim: usize) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .with_context(|| format!("reading queries from {}", path.display()))?;
    let mut queries = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let parsed: Result<Vec<f64>, _> =
            record.iter().map(|v| v.trim().parse::<f64>()).collect();
        match parsed {
            Ok(vector) => {
                if vector.len() != dim {
                    bail!(
                        "query row {line} has {} values, the training set expects {dim}",
                        vector.len()
                    );
                }
                queries.push(vector);
            }
            Err(_) if line == 0 => continue, // header row
            Err(e) => return Err(e).with_context(|| format!("query row {line}")),
        }
    }
    if queries.is_empty() {
        bail!("query CSV {} holds no usable rows", path.display());
    }
    Ok(queries)
}
