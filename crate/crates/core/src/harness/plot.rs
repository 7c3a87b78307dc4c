use std::path::Path;

use super::HarnessError;

/// Merges run CSVs into one table `k,x_ref,y_ref,x_<label>,y_<label>,...`
/// where `label` is the file stem without its `run_` prefix. Returns the
/// number of data rows written. Nothing is written on error.
pub fn emit_plot_data(inputs: &[impl AsRef<Path>], out: &Path) -> Result<usize, HarnessError> {
    let err = |m: String| HarnessError::Output(m);
    if inputs.is_empty() {
        return Err(err("no run CSVs given".into()));
    }
    let mut reference: Option<Vec<(f64, f64)>> = None;
    let mut columns: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for input in inputs {
        let path = input.as_ref();
        let label = path
            .file_stem()
            .and_then(|s| s.to_str())
            .map(|s| s.strip_prefix("run_").unwrap_or(s).to_string())
            .ok_or_else(|| err(format!("{}: unusable file name", path.display())))?;
        let mut rd = csv::Reader::from_path(path).map_err(|e| err(format!("{}: {e}", path.display())))?;
        let headers = rd.headers().map_err(|e| err(format!("{}: {e}", path.display())))?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| err(format!("{}: missing column `{name}`", path.display())))
        };
        let (ixr, iyr, ix, iy) = (col("x_ref")?, col("y_ref")?, col("x")?, col("y")?);
        let mut refs = Vec::new();
        let mut acts = Vec::new();
        for (n, rec) in rd.records().enumerate() {
            let rec = rec.map_err(|e| err(format!("{}: {e}", path.display())))?;
            let num = |i: usize| -> Result<f64, HarnessError> {
                rec.get(i)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| err(format!("{}: row {}: bad number", path.display(), n + 1)))
            };
            refs.push((num(ixr)?, num(iyr)?));
            acts.push((num(ix)?, num(iy)?));
        }
        if acts.is_empty() {
            return Err(err(format!("{}: no data rows", path.display())));
        }
        match &reference {
            None => reference = Some(refs),
            Some(r) if r.len() != refs.len() => {
                return Err(err(format!("{}: {} rows, expected {}", path.display(), refs.len(), r.len())));
            }
            Some(_) => {}
        }
        columns.push((label, acts));
    }
    let reference = reference.expect("at least one input");

    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let mut header = vec!["k".to_string(), "x_ref".into(), "y_ref".into()];
    for (label, _) in &columns {
        header.push(format!("x_{label}"));
        header.push(format!("y_{label}"));
    }
    let werr = |e: csv::Error| err(e.to_string());
    w.write_record(&header).map_err(werr)?;
    for (k, (xr, yr)) in reference.iter().enumerate() {
        let mut rec = vec![k.to_string(), xr.to_string(), yr.to_string()];
        for (_, acts) in &columns {
            rec.push(acts[k].0.to_string());
            rec.push(acts[k].1.to_string());
        }
        w.write_record(&rec).map_err(werr)?;
    }
    let bytes = w.into_inner().map_err(|e| err(e.to_string()))?;
    std::fs::write(out, bytes).map_err(|e| err(format!("{}: {e}", out.display())))?;
    Ok(reference.len())
}
