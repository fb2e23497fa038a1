use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Attribute, ClassLabel, Dataset, DatasetError, Instance};

const PROVENANCE: [&str; 4] = ["project", "scope", "scope_index", "name"];
const CLASS: &str = "class";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Arff,
}

impl TableFormat {
    pub fn from_path(path: &Path) -> TableFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("arff") => TableFormat::Arff,
            _ => TableFormat::Csv,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            TableFormat::Csv => "csv",
            TableFormat::Arff => "arff",
        }
    }
}

impl FromStr for TableFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(TableFormat::Csv),
            "arff" => Ok(TableFormat::Arff),
            other => Err(format!("unknown format `{other}` (expected csv or arff)")),
        }
    }
}

/// Shortest text that parses back to the same bits.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Provenance sidecar written next to an ARFF file.
pub fn provenance_path(arff: &Path) -> PathBuf {
    arff.with_extension("provenance.csv")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn export_table(ds: &Dataset, format: TableFormat, path: &Path) -> Result<(), DatasetError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(path))?;
    }
    match format {
        TableFormat::Csv => write_csv(ds, path),
        TableFormat::Arff => {
            fs::write(path, arff_text(ds)).map_err(io_err(path))?;
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_path(provenance_path(path))?;
            w.write_record(PROVENANCE)?;
            for i in ds.instances() {
                w.write_record([i.project.as_str(), &i.scope, &i.scope_index.to_string(), &i.name])?;
            }
            w.flush().map_err(io_err(path))
        }
    }
}

fn write_csv(ds: &Dataset, path: &Path) -> Result<(), DatasetError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    let mut header: Vec<&str> = PROVENANCE.to_vec();
    header.extend(ds.attribute_ids());
    header.push(CLASS);
    w.write_record(&header)?;
    for i in ds.instances() {
        let mut row = vec![
            i.project.clone(),
            i.scope.clone(),
            i.scope_index.to_string(),
            i.name.clone(),
        ];
        row.extend(i.values.iter().map(|v| format_number(*v)));
        row.push(i.label.as_str().to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(io_err(path))
}

fn arff_text(ds: &Dataset) -> String {
    let mut out = String::from("@relation featforge\n\n");
    for a in ds.attributes() {
        out.push_str(&format!("@attribute {} numeric\n", a.id));
    }
    out.push_str("@attribute class {defective,clean}\n\n@data\n");
    for i in ds.instances() {
        for v in &i.values {
            out.push_str(&format_number(*v));
            out.push(',');
        }
        out.push_str(i.label.as_str());
        out.push('\n');
    }
    out
}

/// Reads a table written by [`export_table`]; the format follows the file
/// extension.
pub fn import_table(path: &Path) -> Result<Dataset, DatasetError> {
    match TableFormat::from_path(path) {
        TableFormat::Csv => read_csv(path),
        TableFormat::Arff => read_arff(path),
    }
}

fn mismatch(msg: impl Into<String>) -> DatasetError {
    DatasetError::SchemaMismatch(msg.into())
}

fn parse_value(s: &str, row: usize) -> Result<f64, DatasetError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| mismatch(format!("row {row}: `{s}` is not numeric")))
}

fn parse_label(s: &str, row: usize) -> Result<ClassLabel, DatasetError> {
    s.trim()
        .parse::<ClassLabel>()
        .map_err(|_| mismatch(format!("row {row}: unknown class `{s}`")))
}

fn read_csv(path: &Path) -> Result<Dataset, DatasetError> {
    let mut r = csv::ReaderBuilder::new().from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.len() < PROVENANCE.len() + 1 || header[..PROVENANCE.len()] != PROVENANCE {
        return Err(mismatch("missing provenance columns"));
    }
    if header.last().map(String::as_str) != Some(CLASS) {
        return Err(mismatch("missing class column"));
    }
    let attributes: Vec<Attribute> = header[PROVENANCE.len()..header.len() - 1]
        .iter()
        .map(Attribute::new)
        .collect();
    let mut instances = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(mismatch(format!(
                "row {row}: {} fields, expected {}",
                rec.len(),
                header.len()
            )));
        }
        let scope_index = rec[2]
            .parse()
            .map_err(|_| mismatch(format!("row {row}: bad scope index `{}`", &rec[2])))?;
        let values = (PROVENANCE.len()..rec.len() - 1)
            .map(|c| parse_value(&rec[c], row))
            .collect::<Result<_, _>>()?;
        instances.push(Instance {
            project: rec[0].to_string(),
            scope: rec[1].to_string(),
            scope_index,
            name: rec[3].to_string(),
            values,
            label: parse_label(&rec[rec.len() - 1], row)?,
        });
    }
    Dataset::new(attributes, instances)
}

fn read_arff(path: &Path) -> Result<Dataset, DatasetError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut attributes = Vec::new();
    let mut has_class = false;
    let mut in_data = false;
    let mut rows: Vec<(Vec<f64>, ClassLabel)> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if in_data {
            let row = rows.len();
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != attributes.len() + 1 {
                return Err(mismatch(format!("data row {row}: {} fields", fields.len())));
            }
            let values = fields[..attributes.len()]
                .iter()
                .map(|f| parse_value(f, row))
                .collect::<Result<_, _>>()?;
            rows.push((values, parse_label(fields[attributes.len()], row)?));
            continue;
        }
        let lower = line.to_ascii_lowercase();
        if lower.starts_with("@attribute") {
            let mut parts = line.split_whitespace().skip(1);
            let name = parts.next().ok_or_else(|| mismatch("attribute without a name"))?;
            if has_class {
                return Err(mismatch("class must be the last attribute"));
            }
            if name == CLASS {
                has_class = true;
            } else {
                attributes.push(Attribute::new(name));
            }
        } else if lower.starts_with("@data") {
            if !has_class {
                return Err(mismatch("missing class attribute"));
            }
            in_data = true;
        }
    }
    if !in_data {
        return Err(mismatch("missing @data section"));
    }

    let sidecar = provenance_path(path);
    let provenance: Vec<(String, String, usize, String)> = if sidecar.exists() {
        let mut r = csv::Reader::from_path(&sidecar)?;
        r.records()
            .map(|rec| {
                let rec = rec?;
                Ok((
                    rec[0].to_string(),
                    rec[1].to_string(),
                    rec[2].parse().map_err(|_| mismatch("bad scope index in provenance"))?,
                    rec[3].to_string(),
                ))
            })
            .collect::<Result<_, DatasetError>>()?
    } else {
        (0..rows.len())
            .map(|i| (String::new(), String::new(), 0, format!("row{i}")))
            .collect()
    };
    if provenance.len() != rows.len() {
        return Err(mismatch("provenance sidecar row count differs from @data"));
    }
    let instances = rows
        .into_iter()
        .zip(provenance)
        .map(|((values, label), (project, scope, scope_index, name))| Instance {
            project,
            scope,
            scope_index,
            name,
            values,
            label,
        })
        .collect();
    Dataset::new(attributes, instances)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Dataset {
        let attrs = vec![Attribute::new("fcomm"), Attribute::new("fexp")];
        let mk = |name: &str, values: Vec<f64>, d: bool| Instance {
            project: "alpha".into(),
            scope: "v1.0".into(),
            scope_index: 0,
            name: name.into(),
            values,
            label: ClassLabel::from_flag(d),
        };
        Dataset::new(
            attrs,
            vec![
                mk("A & B", vec![2.0, 13.142135623730951], true),
                mk("src/x,y.c", vec![0.1, 1e-300], false),
            ],
        )
        .unwrap()
    }

    #[test]
    fn number_format_round_trips() {
        for v in [
            0.0,
            -0.0,
            1.0,
            0.1,
            1.0 / 3.0,
            1e-7,
            1e300,
            -2.5e16,
            f64::MIN_POSITIVE,
            123456.789,
        ] {
            let s = format_number(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(format_number(3.0), "3");
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        export_table(&sample(), TableFormat::Csv, &p).unwrap();
        assert_eq!(import_table(&p).unwrap(), sample());
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("project,scope,scope_index,name,fcomm,fexp,class\n"));
    }

    #[test]
    fn arff_layout_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.arff");
        export_table(&sample(), TableFormat::Arff, &p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("@relation featforge\n"));
        assert!(
            text.contains("@attribute fcomm numeric\n@attribute fexp numeric\n@attribute class {defective,clean}\n")
        );
        assert!(text.contains("@data\n2,13.142135623730951,defective\n"));
        assert!(provenance_path(&p).exists());
        assert_eq!(import_table(&p).unwrap(), sample());
    }

    #[test]
    fn missing_class_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "project,scope,scope_index,name,fcomm\np,r,0,x,1\n").unwrap();
        assert!(matches!(import_table(&p), Err(DatasetError::SchemaMismatch(_))));
        let a = dir.path().join("bad.arff");
        fs::write(&a, "@relation x\n@attribute fcomm numeric\n@data\n1\n").unwrap();
        assert!(matches!(import_table(&a), Err(DatasetError::SchemaMismatch(_))));
    }
}
