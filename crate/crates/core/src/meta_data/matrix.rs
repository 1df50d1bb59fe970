use std::collections::BTreeSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Column names of the meta-dataset CSV, in order.
pub const CSV_HEADER: [&str; 4] = ["dataset_id", "algorithm_id", "accuracy", "runtime_seconds"];

/// One test result: algorithm run on a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord<T> {
    pub dataset_id: String,
    pub algorithm_id: String,
    pub accuracy: T,
    pub runtime_seconds: T,
}

/// A present cell of the matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell<T> {
    pub accuracy: T,
    pub runtime_seconds: T,
}

/// Algorithms × datasets grid of optional test results.
///
/// Algorithm and dataset ids are kept sorted lexicographically. Cells are
/// stored densely, dataset-major; an absent cell is `None`. A dataset whose
/// column is entirely absent is still listed.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceMatrix<T> {
    algorithms: Vec<String>,
    datasets: Vec<String>,
    cells: Vec<Option<Cell<T>>>,
}

fn check_cell<T: Scalar>(line: u64, accuracy: T, runtime: T) -> Result<()> {
    if !(accuracy >= T::zero() && accuracy <= T::one()) {
        return Err(Error::AccuracyOutOfRange {
            line,
            value: accuracy.as_f64(),
        });
    }
    if !runtime.is_finite() || runtime <= T::zero() {
        return Err(Error::NonPositiveRuntime {
            line,
            value: runtime.as_f64(),
        });
    }
    Ok(())
}

impl<T: Scalar> PerformanceMatrix<T> {
    /// An all-absent matrix over the given ids (sorted and checked for duplicates).
    pub fn empty(
        algorithms: impl IntoIterator<Item = String>,
        datasets: impl IntoIterator<Item = String>,
    ) -> Result<Self> {
        let algorithms = sorted_unique(algorithms, "algorithm")?;
        let datasets = sorted_unique(datasets, "dataset")?;
        let cells = vec![None; algorithms.len() * datasets.len()];
        Ok(Self {
            algorithms,
            datasets,
            cells,
        })
    }

    /// Builds a matrix from records; the id lists are the ids that occur.
    pub fn from_records(records: impl IntoIterator<Item = RunRecord<T>>) -> Result<Self> {
        Self::from_numbered(
            records
                .into_iter()
                .enumerate()
                .map(|(i, r)| (i as u64 + 1, r)),
        )
    }

    fn from_numbered(records: impl IntoIterator<Item = (u64, RunRecord<T>)>) -> Result<Self> {
        let records: Vec<_> = records.into_iter().collect();
        let mut algorithms = BTreeSet::new();
        let mut datasets = BTreeSet::new();
        for (line, r) in &records {
            if r.dataset_id.is_empty() || r.algorithm_id.is_empty() {
                return Err(Error::Parse {
                    line: *line,
                    message: "empty id".into(),
                });
            }
            check_cell(*line, r.accuracy, r.runtime_seconds)?;
            algorithms.insert(r.algorithm_id.clone());
            datasets.insert(r.dataset_id.clone());
        }
        let mut matrix = Self::empty(algorithms, datasets)?;
        for (line, r) in records {
            let d = matrix
                .dataset_index(&r.dataset_id)
                .expect("collected above");
            let a = matrix
                .algorithm_index(&r.algorithm_id)
                .expect("collected above");
            let slot = matrix.slot(d, a);
            if matrix.cells[slot].is_some() {
                return Err(Error::DuplicatePair {
                    line,
                    dataset: r.dataset_id,
                    algorithm: r.algorithm_id,
                });
            }
            matrix.cells[slot] = Some(Cell {
                accuracy: r.accuracy,
                runtime_seconds: r.runtime_seconds,
            });
        }
        Ok(matrix)
    }

    pub fn algorithms(&self) -> &[String] {
        &self.algorithms
    }

    pub fn datasets(&self) -> &[String] {
        &self.datasets
    }

    pub fn n_algorithms(&self) -> usize {
        self.algorithms.len()
    }

    pub fn n_datasets(&self) -> usize {
        self.datasets.len()
    }

    pub fn algorithm_index(&self, id: &str) -> Option<usize> {
        self.algorithms
            .binary_search_by(|a| a.as_str().cmp(id))
            .ok()
    }

    pub fn dataset_index(&self, id: &str) -> Option<usize> {
        self.datasets.binary_search_by(|d| d.as_str().cmp(id)).ok()
    }

    fn slot(&self, dataset: usize, algorithm: usize) -> usize {
        dataset * self.algorithms.len() + algorithm
    }

    /// Cell by indices into [`datasets`](Self::datasets) and [`algorithms`](Self::algorithms).
    pub fn cell(&self, dataset: usize, algorithm: usize) -> Option<&Cell<T>> {
        self.cells[self.slot(dataset, algorithm)].as_ref()
    }

    /// Cell by ids.
    pub fn get(&self, dataset_id: &str, algorithm_id: &str) -> Option<&Cell<T>> {
        let d = self.dataset_index(dataset_id)?;
        let a = self.algorithm_index(algorithm_id)?;
        self.cell(d, a)
    }

    /// Present cells of one dataset column as `(algorithm index, cell)`.
    pub fn column(&self, dataset: usize) -> impl Iterator<Item = (usize, &Cell<T>)> + '_ {
        let start = self.slot(dataset, 0);
        self.cells[start..start + self.algorithms.len()]
            .iter()
            .enumerate()
            .filter_map(|(a, c)| c.as_ref().map(|c| (a, c)))
    }

    pub fn present_in_dataset(&self, dataset: usize) -> usize {
        self.column(dataset).count()
    }

    pub fn n_present(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    pub fn n_absent(&self) -> usize {
        self.cells.len() - self.n_present()
    }

    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(Option::is_some)
    }

    /// Present cells as records, ordered by (dataset_id, algorithm_id).
    pub fn records(&self) -> impl Iterator<Item = RunRecord<T>> + '_ {
        (0..self.datasets.len()).flat_map(move |d| {
            self.column(d).map(move |(a, c)| RunRecord {
                dataset_id: self.datasets[d].clone(),
                algorithm_id: self.algorithms[a].clone(),
                accuracy: c.accuracy,
                runtime_seconds: c.runtime_seconds,
            })
        })
    }

    /// Same matrix with the given dataset column removed from the layout.
    pub fn without_dataset(&self, dataset: usize) -> Self {
        let n_alg = self.algorithms.len();
        let mut datasets = self.datasets.clone();
        datasets.remove(dataset);
        let cells = self
            .cells
            .chunks(n_alg.max(1))
            .enumerate()
            .filter(|(d, _)| *d != dataset)
            .flat_map(|(_, col)| col.iter().copied())
            .collect();
        Self {
            algorithms: self.algorithms.clone(),
            datasets,
            cells: if n_alg == 0 { Vec::new() } else { cells },
        }
    }

    /// Drops every cell of a dataset column, keeping the dataset listed.
    pub(crate) fn clear_dataset(&mut self, dataset: usize) {
        let start = self.slot(dataset, 0);
        let end = start + self.algorithms.len();
        self.cells[start..end].iter_mut().for_each(|c| *c = None);
    }

    pub(crate) fn remove_cell(&mut self, dataset: usize, algorithm: usize) {
        let slot = self.slot(dataset, algorithm);
        self.cells[slot] = None;
    }

    pub(crate) fn set_cell(&mut self, dataset: usize, algorithm: usize, cell: Cell<T>) {
        let slot = self.slot(dataset, algorithm);
        self.cells[slot] = Some(cell);
    }

    /// Reads the CSV format `dataset_id,algorithm_id,accuracy,runtime_seconds`.
    ///
    /// Row order is irrelevant. Errors carry the 1-based line number.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.iter().ne(CSV_HEADER.iter().copied()) {
            return Err(Error::Parse {
                line: 1,
                message: format!(
                    "expected header {:?}, found {:?}",
                    CSV_HEADER.join(","),
                    header.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
        let mut records = Vec::new();
        for row in rdr.records() {
            let row = row?;
            let line = row.position().map_or(0, |p| p.line());
            let field = |i: usize| row.get(i).unwrap_or_default();
            let number = |i: usize| -> Result<T> {
                field(i).parse::<T>().map_err(|_| Error::Parse {
                    line,
                    message: format!("{}: not a number: {:?}", CSV_HEADER[i], field(i)),
                })
            };
            let record = RunRecord {
                dataset_id: field(0).to_owned(),
                algorithm_id: field(1).to_owned(),
                accuracy: number(2)?,
                runtime_seconds: number(3)?,
            };
            records.push((line, record));
        }
        Self::from_numbered(records)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::read_csv(file)
    }

    /// Writes present cells sorted by (dataset_id, algorithm_id).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(CSV_HEADER)?;
        for r in self.records() {
            wtr.write_record([
                r.dataset_id,
                r.algorithm_id,
                r.accuracy.to_string(),
                r.runtime_seconds.to_string(),
            ])?;
        }
        wtr.flush().map_err(|source| Error::Io {
            path: Default::default(),
            source,
        })?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn sorted_unique(ids: impl IntoIterator<Item = String>, what: &str) -> Result<Vec<String>> {
    let mut ids: Vec<String> = ids.into_iter().collect();
    ids.sort();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::InvalidConfig(format!(
            "duplicate {what} id {:?}",
            w[0]
        )));
    }
    if ids.iter().any(String::is_empty) {
        return Err(Error::InvalidConfig(format!("empty {what} id")));
    }
    Ok(ids)
}
