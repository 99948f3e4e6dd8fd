use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::student::{LabeledDataset, Sample};

/// Reads a dataset with a header row whose last column is `label`
/// (non-negative integers); every other column is a numeric feature.
pub fn load_csv(path: &Path) -> Result<LabeledDataset> {
    read_csv(File::open(path)?)
}

pub fn read_csv<R: Read>(reader: R) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::CsvEmpty);
    }
    if headers.iter().next_back() != Some("label") {
        return Err(Error::CsvMissingLabel);
    }
    let num_features = headers.len() - 1;
    let mut samples = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let row = row + 1;
        let mut features = Vec::with_capacity(num_features);
        for (j, field) in record.iter().take(num_features).enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::CsvNonNumericFeature {
                row,
                column: headers[j].to_string(),
            })?;
            features.push(v);
        }
        let label: usize = record[num_features]
            .parse()
            .map_err(|_| Error::CsvNonIntegerLabel { row })?;
        samples.push(Sample {
            index: 0,
            features,
            label,
            concept: None,
        });
    }
    if samples.is_empty() {
        return Err(Error::CsvEmpty);
    }
    let num_classes = samples.iter().map(|s| s.label).max().unwrap_or(0) + 1;
    LabeledDataset::new(samples, num_classes)
}

pub fn write_csv(data: &LabeledDataset, path: &Path) -> Result<()> {
    let mut f = File::create(path)?;
    f.write_all(&to_csv_bytes(data)?)?;
    Ok(())
}

/// Features print in shortest round-trip form, so a reload is exact.
pub fn to_csv_bytes(data: &LabeledDataset) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (0..data.feature_dim()).map(|j| format!("x{j}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for s in data.samples() {
        let mut row: Vec<String> = s.features.iter().map(|x| x.to_string()).collect();
        row.push(s.label.to_string());
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}
