//! File formats: spectra, posterior draws and predictive bands as CSV,
//! everything else as JSON. Floats are written with 17 significant digits.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::{PipelineConfig, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::grid::WavenumberGrid;
use crate::model::{ModelParams, VoigtLine};
use crate::narrowing::NarrowedSpectrum;
use crate::smc::Band;

pub const SPECTRUM_HEADER: [&str; 2] = ["wavenumber_cm-1", "intensity"];
pub const BAND_HEADER: [&str; 5] = ["wavenumber", "lower", "median", "upper", "series"];

/// Lossless decimal form of a float.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(create(path)?))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<BufReader<File>>> {
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::format(path, e.to_string())
}

fn parse_f64(path: &Path, row: usize, field: &str) -> Result<f64> {
    field
        .parse()
        .map_err(|_| Error::format(path, format!("row {row}: '{field}' is not a number")))
}

fn check_header(path: &Path, found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if found.iter().ne(expected.iter().copied()) {
        return Err(Error::format(
            path,
            format!("expected header '{}', found '{}'", expected.join(","), found.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    Ok(())
}

fn finish(path: &Path, w: csv::Writer<BufWriter<File>>) -> Result<()> {
    let mut inner = w
        .into_inner()
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

pub fn write_spectrum(path: &Path, grid: &WavenumberGrid, values: &[f64]) -> Result<()> {
    grid.ensure_len(values.len())?;
    let mut w = csv_writer(path)?;
    let io = |e| csv_err(path, e);
    w.write_record(SPECTRUM_HEADER).map_err(io)?;
    for (k, v) in values.iter().enumerate() {
        w.write_record([fmt_f64(grid.at(k)), fmt_f64(*v)]).map_err(io)?;
    }
    finish(path, w)
}

pub fn read_spectrum(path: &Path) -> Result<(WavenumberGrid, Vec<f64>)> {
    let mut r = csv_reader(path)?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    check_header(path, &header, &SPECTRUM_HEADER)?;
    let mut axis = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        if rec.len() != 2 {
            return Err(Error::format(path, format!("row {}: expected 2 fields", i + 1)));
        }
        axis.push(parse_f64(path, i + 1, &rec[0])?);
        values.push(parse_f64(path, i + 1, &rec[1])?);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::format(path, "non-finite intensity"));
    }
    let grid = WavenumberGrid::from_axis(&axis).map_err(|e| Error::format(path, e.to_string()))?;
    Ok((grid, values))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::format(path, e.to_string()))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).map_err(|e| Error::format(path, e.to_string()))
}

/// Writes `value` as a JSON object with a leading `schema_version` field.
pub fn write_versioned_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut obj = serde_json::Map::new();
    obj.insert("schema_version".into(), SCHEMA_VERSION.into());
    match serde_json::to_value(value).map_err(|e| Error::format(path, e.to_string()))? {
        serde_json::Value::Object(m) => obj.extend(m),
        _ => return Err(Error::format(path, "expected a JSON object")),
    }
    write_json(path, &obj)
}

pub fn read_versioned_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let mut v: serde_json::Value = read_json(path)?;
    let obj = v
        .as_object_mut()
        .ok_or_else(|| Error::format(path, "expected a JSON object"))?;
    match obj.remove("schema_version").and_then(|s| s.as_u64()) {
        Some(s) if s == SCHEMA_VERSION as u64 => {}
        Some(s) => return Err(Error::format(path, format!("unsupported schema_version {s}"))),
        None => return Err(Error::format(path, "missing schema_version")),
    }
    serde_json::from_value(v).map_err(|e| Error::format(path, e.to_string()))
}

/// Reads a configuration file, resolving relative paths against its directory.
pub fn read_config(path: &Path) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = PipelineConfig::from_json(&text).map_err(|e| Error::format(path, e.to_string()))?;
    if let Some(basis) = &cfg.model.error_basis {
        if basis.is_relative() {
            let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
            cfg.model.error_basis = Some(dir.join(basis));
        }
    }
    Ok(cfg)
}

pub fn posterior_header(n_lines: usize) -> Vec<String> {
    let mut h = vec!["p".to_string()];
    for n in 1..=n_lines {
        h.extend(["a", "nu", "sigma", "gamma"].map(|s| format!("{s}_{n}")));
    }
    h
}

pub fn write_posterior(path: &Path, draws: &[ModelParams]) -> Result<()> {
    let n_lines = draws
        .first()
        .map(ModelParams::n_lines)
        .ok_or_else(|| Error::invalid("no posterior draws"))?;
    let mut w = csv_writer(path)?;
    let io = |e| csv_err(path, e);
    w.write_record(posterior_header(n_lines)).map_err(io)?;
    for d in draws {
        if d.n_lines() != n_lines {
            return Err(Error::invalid("draws differ in line count"));
        }
        let mut row = vec![fmt_f64(d.background)];
        for l in &d.lines {
            row.extend([l.amplitude, l.location, l.sigma, l.gamma].map(fmt_f64));
        }
        w.write_record(&row).map_err(io)?;
    }
    finish(path, w)
}

pub fn read_posterior(path: &Path) -> Result<Vec<ModelParams>> {
    let mut r = csv_reader(path)?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.len() < 5 || (header.len() - 1) % 4 != 0 {
        return Err(Error::format(path, "posterior header must be p followed by 4 columns per line"));
    }
    let n_lines = (header.len() - 1) / 4;
    let expected = posterior_header(n_lines);
    check_header(path, &header, &expected.iter().map(String::as_str).collect::<Vec<_>>())?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let v = rec
            .iter()
            .map(|f| parse_f64(path, i + 1, f))
            .collect::<Result<Vec<_>>>()?;
        let lines = v[1..]
            .chunks_exact(4)
            .map(|c| VoigtLine { amplitude: c[0], location: c[1], sigma: c[2], gamma: c[3] })
            .collect();
        let p = ModelParams { lines, background: v[0] };
        p.validate().map_err(|e| Error::format(path, format!("row {}: {e}", i + 1)))?;
        out.push(p);
    }
    if out.is_empty() {
        return Err(Error::format(path, "no posterior draws"));
    }
    Ok(out)
}

pub fn write_bands(path: &Path, grid: &WavenumberGrid, bands: &[Band]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let io = |e| csv_err(path, e);
    w.write_record(BAND_HEADER).map_err(io)?;
    for b in bands {
        grid.ensure_len(b.median.len())?;
        for k in 0..grid.len() {
            w.write_record([
                fmt_f64(grid.at(k)),
                fmt_f64(b.lower[k]),
                fmt_f64(b.median[k]),
                fmt_f64(b.upper[k]),
                b.series.clone(),
            ])
            .map_err(io)?;
        }
    }
    finish(path, w)
}

/// Reads bands back, with the wavenumber axis of the first series.
pub fn read_bands(path: &Path) -> Result<(Vec<f64>, Vec<Band>)> {
    let mut r = csv_reader(path)?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    check_header(path, &header, &BAND_HEADER)?;
    let mut bands: Vec<Band> = Vec::new();
    let mut axis = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        if rec.len() != 5 {
            return Err(Error::format(path, format!("row {}: expected 5 fields", i + 1)));
        }
        let series = &rec[4];
        if bands.last().is_none_or(|b| b.series != series) {
            bands.push(Band {
                series: series.to_string(),
                lower: Vec::new(),
                median: Vec::new(),
                upper: Vec::new(),
            });
        }
        if bands.len() == 1 {
            axis.push(parse_f64(path, i + 1, &rec[0])?);
        }
        let b = bands.last_mut().expect("a band was just pushed");
        b.lower.push(parse_f64(path, i + 1, &rec[1])?);
        b.median.push(parse_f64(path, i + 1, &rec[2])?);
        b.upper.push(parse_f64(path, i + 1, &rec[3])?);
    }
    if let Some(b) = bands.iter().find(|b| b.median.len() != axis.len()) {
        return Err(Error::format(path, format!("series {} has {} rows, expected {}", b.series, b.median.len(), axis.len())));
    }
    Ok((axis, bands))
}

/// Narrowed, smoothed and reconstructed series side by side.
pub fn write_narrowed(path: &Path, n: &NarrowedSpectrum) -> Result<()> {
    let mut w = csv_writer(path)?;
    let io = |e| csv_err(path, e);
    w.write_record(["wavenumber", "narrowed", "smoothed", "reconstruction"]).map_err(io)?;
    for k in 0..n.grid.len() {
        w.write_record([n.grid.at(k), n.narrowed[k], n.smoothed[k], n.reconstruction[k]].map(fmt_f64))
            .map_err(io)?;
    }
    finish(path, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        let v = 0.1f64 + 0.2;
        let s = fmt_f64(v);
        assert_eq!(s.parse::<f64>().unwrap(), v);
        assert_eq!(s, "3.0000000000000004e-1");
    }

    #[test]
    fn spectrum_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let grid = WavenumberGrid::new(400.0, 0.5, 16).unwrap();
        let values: Vec<f64> = (0..16).map(|k| (k as f64 * 0.37).sin() / 3.0).collect();
        write_spectrum(&path, &grid, &values).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("wavenumber_cm-1,intensity\n"));
        assert!(!text.contains('\r'));
        let (g, v) = read_spectrum(&path).unwrap();
        assert_eq!(v, values);
        assert_eq!(g.len(), 16);
        assert!((g.step() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bad_header_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        std::fs::write(&path, "x,y\n1,2\n").unwrap();
        assert!(matches!(read_spectrum(&path), Err(Error::Format { .. })));
        let missing = dir.path().join("nope.csv");
        match read_spectrum(&missing) {
            Err(Error::Io { path, .. }) => assert_eq!(path, missing),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn versioned_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.json");
        let grid = WavenumberGrid::new(1.0, 2.0, 8).unwrap();
        write_versioned_json(&path, &grid).unwrap();
        let back: WavenumberGrid = read_versioned_json(&path).unwrap();
        assert_eq!(back, grid);
        write_json(&path, &grid).unwrap();
        assert!(read_versioned_json::<WavenumberGrid>(&path).is_err());
    }
}
