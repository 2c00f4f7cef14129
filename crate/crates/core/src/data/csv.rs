use std::fmt::Write as _;
use std::path::Path;

use crate::data::dataset::{Domain, LabeledDataset};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Renders `label,f0,…` rows. `{}` on `f64` prints the shortest decimal
/// that parses back to the same bits.
pub fn write_feature_csv(ds: &LabeledDataset) -> String {
    let mut out = String::from("label");
    for j in 0..ds.dim() {
        write!(out, ",f{j}").unwrap();
    }
    out.push('\n');
    for (row, y) in ds.features().iter_rows().zip(ds.labels()) {
        write!(out, "{y}").unwrap();
        for v in row {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn save_feature_csv(ds: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_feature_csv(ds)).map_err(|e| Error::io(path, e))
}

/// Reads a feature CSV. With `class_count` unset, `C` is one more than the
/// largest label.
pub fn load_feature_csv(path: impl AsRef<Path>, domain: Domain, class_count: Option<usize>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_feature_csv(&text, path, domain, class_count)
}

fn parse_feature_csv(text: &str, path: &Path, domain: Domain, class_count: Option<usize>) -> Result<LabeledDataset> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty dataset".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols[0] != "label" || cols.len() < 2 {
        return Err(err(1, format!("expected header label,f0,..., got {header:?}")));
    }
    for (j, c) in cols[1..].iter().enumerate() {
        if *c != format!("f{j}") {
            return Err(err(1, format!("expected column f{j}, got {c:?}")));
        }
    }
    let dim = cols.len() - 1;

    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != dim + 1 {
            return Err(err(no, format!("expected {} cells, found {}", dim + 1, cells.len())));
        }
        let label: usize = match cells[0].trim().parse::<i64>() {
            Ok(v) if v >= 0 => v as usize,
            Ok(v) => return Err(err(no, format!("label {v} out of range"))),
            Err(_) => return Err(err(no, format!("label {:?} is not an integer", cells[0]))),
        };
        if let Some(c) = class_count {
            if label >= c {
                return Err(err(no, format!("label {label} out of range for {c} classes")));
            }
        }
        for cell in &cells[1..] {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| err(no, format!("{cell:?} is not a number")))?;
            if !v.is_finite() {
                return Err(err(no, format!("{cell:?} is not finite")));
            }
            data.push(v);
        }
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(err(1, "empty dataset".into()));
    }
    let classes = class_count.unwrap_or_else(|| labels.iter().max().unwrap() + 1);
    let n = labels.len();
    LabeledDataset::new(Matrix::from_vec(n, dim, data)?, labels, domain, classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    fn parse(text: &str) -> Result<LabeledDataset> {
        parse_feature_csv(text, Path::new("x.csv"), Domain::Source, Some(3))
    }

    #[test]
    fn hand_written_fixture() {
        let ds = parse("label,f0,f1\n0,1.5,-2\n2,0.1,3e-3\n1,0,1e300\n").unwrap();
        assert_eq!(ds.labels(), &[0, 2, 1]);
        assert_eq!(ds.features().as_slice(), &[1.5, -2.0, 0.1, 3e-3, 0.0, 1e300]);
    }

    #[test]
    fn header_only() {
        let e = parse("label,f0\n").unwrap_err().to_string();
        assert!(e.contains("empty dataset"), "{e}");
    }

    #[test]
    fn errors_carry_line_numbers() {
        for (text, line) in [
            ("label,f0,f1\n0,1,2\n1,2\n", "line 3"),
            ("label,f0\n0,1\n1,abc\n", "line 3"),
            ("label,f0\n3,1\n", "line 2"),
            ("label,f0\n-1,1\n", "line 2"),
            ("label,g0\n0,1\n", "line 1"),
        ] {
            let e = parse(text).unwrap_err().to_string();
            assert!(e.contains(line), "{text:?}: {e}");
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = Rng::new(1);
        let data: Vec<f64> = (0..60).map(|_| rng.gaussian(0.0, 1e3) / 7.0).collect();
        let labels: Vec<usize> = (0..20).map(|i| i % 3).collect();
        let ds = LabeledDataset::new(Matrix::from_vec(20, 3, data).unwrap(), labels, Domain::Source, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        save_feature_csv(&ds, &path).unwrap();
        assert_eq!(load_feature_csv(&path, Domain::Source, Some(3)).unwrap(), ds);
    }
}
