use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::{Deviation, LabeledDataset};

#[derive(Debug, Clone, Copy, Default)]
pub struct ReadOptions {
    /// Clip labels into `[-10, 10]` instead of rejecting them.
    pub clip: bool,
}

fn check_header(header: &csv::StringRecord) -> Result<usize> {
    let cols: Vec<&str> = header.iter().collect();
    let bad = || Error::Format(format!("expected header t,f1..fD,y, got {:?}", cols.join(",")));
    if cols.len() < 2 || cols[0] != "t" || cols[cols.len() - 1] != "y" {
        return Err(bad());
    }
    let dim = cols.len() - 2;
    for (j, name) in cols[1..=dim].iter().enumerate() {
        if *name != format!("f{}", j + 1) {
            return Err(bad());
        }
    }
    Ok(dim)
}

/// Reads a `t,f1..fD,y` CSV. Row numbers in errors are 1-based data rows.
pub fn read_dataset_from<T: Real, R: Read>(reader: R, options: ReadOptions) -> Result<LabeledDataset<T>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let dim = check_header(rdr.headers()?)?;
    let (mut times, mut features, mut labels) = (Vec::new(), Vec::new(), Vec::new());
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::row(row, e.to_string()))?;
        if record.len() != dim + 2 {
            return Err(Error::row(row, format!("expected {} fields, got {}", dim + 2, record.len())));
        }
        let t: u64 = record[0]
            .trim()
            .parse()
            .map_err(|_| Error::row(row, format!("non-integer time index {:?}", &record[0])))?;
        if times.last().is_some_and(|&prev| t < prev) {
            return Err(Error::row(row, "time index is not sorted"));
        }
        let x = (1..=dim)
            .map(|j| {
                record[j]
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(T::lit)
                    .ok_or_else(|| Error::row(row, format!("non-numeric feature f{j} {:?}", &record[j])))
            })
            .collect::<Result<Vec<T>>>()?;
        let raw_label = &record[dim + 1];
        let y: i64 = raw_label
            .trim()
            .parse()
            .map_err(|_| Error::row(row, format!("non-integer label {raw_label:?}")))?;
        let label = if options.clip {
            Deviation::clipped(y)
        } else {
            i32::try_from(y)
                .ok()
                .and_then(|v| Deviation::new(v).ok())
                .ok_or_else(|| Error::row(row, format!("label {y} outside [-10, 10] (use clipping)")))?
        };
        times.push(t);
        features.push(x);
        labels.push(label);
    }
    LabeledDataset::new(times, features, labels)
}

pub fn read_dataset<T: Real>(path: impl AsRef<Path>, options: ReadOptions) -> Result<LabeledDataset<T>> {
    read_dataset_from(File::open(path)?, options)
}

pub fn write_dataset_to<T: Real, W: Write>(dataset: &LabeledDataset<T>, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["t".to_string()];
    header.extend((1..=dataset.dim()).map(|j| format!("f{j}")));
    header.push("y".into());
    wtr.write_record(&header)?;
    for ((t, x), y) in dataset.times().iter().zip(dataset.features()).zip(dataset.labels()) {
        let mut rec = Vec::with_capacity(x.len() + 2);
        rec.push(t.to_string());
        rec.extend(x.iter().map(|v| v.as_f64().to_string()));
        rec.push(y.to_string());
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_dataset<T: Real>(dataset: &LabeledDataset<T>, path: impl AsRef<Path>) -> Result<()> {
    write_dataset_to(dataset, File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str, clip: bool) -> Result<LabeledDataset<f64>> {
        read_dataset_from(text.as_bytes(), ReadOptions { clip })
    }

    #[test]
    fn roundtrip() {
        let ds = LabeledDataset::new(
            vec![0, 1, 1],
            vec![vec![0.1, -2.5], vec![1e-17, 3.0], vec![0.3333333333333333, 7.0]],
            vec![Deviation::new(-2).unwrap(), Deviation::ON_TIME, Deviation::new(10).unwrap()],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_dataset_to(&ds, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("t,f1,f2,y\n"));
        assert_eq!(read(std::str::from_utf8(&buf).unwrap(), false).unwrap(), ds);
    }

    #[test]
    fn out_of_range_label_names_row() {
        let err = read("t,f1,y\n0,1.0,3\n1,2.0,11\n", false).unwrap_err();
        assert!(matches!(err, Error::Row { row: 2, .. }), "{err}");
    }

    #[test]
    fn clip_flag_clips() {
        let ds = read("t,f1,y\n0,1.0,14\n1,2.0,-12\n", true).unwrap();
        assert_eq!(ds.labels()[0].days(), 10);
        assert_eq!(ds.labels()[1].days(), -10);
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(read("t,x1,y\n0,1,0\n", false), Err(Error::Format(_))));
        assert!(matches!(read("t,f1,y\n0,1,0.5\n", false), Err(Error::Row { row: 1, .. })));
        assert!(matches!(read("t,f1,y\n5,1,0\n4,1,0\n", false), Err(Error::Row { row: 2, .. })));
        assert!(matches!(read("t,f1,y\n0,abc,0\n", false), Err(Error::Row { row: 1, .. })));
        assert!(matches!(read("t,f1,y\n0,1\n", false), Err(Error::Row { row: 1, .. })));
    }
}
