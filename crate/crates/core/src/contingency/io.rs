//! CSV layout: the first row holds column labels (after a corner cell), each
//! following row starts with its row label, and the remaining cells are integers.

use std::io::{Read, Write};
use std::path::Path;

use super::table::ContingencyTable;
use crate::error::{Error, Result};

impl ContingencyTable {
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() < 3 {
            return Err(Error::Parse("header needs a corner cell and at least two column labels".into()));
        }
        let col_labels: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut row_labels = Vec::new();
        let mut counts = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != headers.len() {
                return Err(Error::Parse(format!("row {} has {} fields, expected {}", line + 1, record.len(), headers.len())));
            }
            row_labels.push(record[0].to_string());
            for field in record.iter().skip(1) {
                counts.push(field.parse::<i64>().map_err(|e| Error::Parse(format!("row {}: `{field}`: {e}", line + 1)))?);
            }
        }
        ContingencyTable::from_counts(row_labels.len(), col_labels.len(), counts)?.with_labels(row_labels, col_labels)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec![String::new()];
        header.extend(self.col_labels().iter().cloned());
        wtr.write_record(&header)?;
        for (i, label) in self.row_labels().iter().enumerate() {
            let mut row = vec![label.clone()];
            row.extend((0..self.cols()).map(|j| self.get(i, j).to_string()));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_keeps_labels() {
        let text = ",red,green,blue\ncat,1,2,3\ndog,4,5,6\n";
        let t = ContingencyTable::read_csv(text.as_bytes()).unwrap();
        assert_eq!(t.rows(), 2);
        assert_eq!(t.cols(), 3);
        assert_eq!(t.get(1, 2), 6);
        assert_eq!(t.col_labels()[1], "green");
        let mut out = Vec::new();
        t.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }

    #[test]
    fn rejects_non_integer_cells() {
        let text = ",a,b\nx,1,2.5\ny,3,4\n";
        assert!(matches!(ContingencyTable::read_csv(text.as_bytes()), Err(Error::Parse(_))));
    }
}
