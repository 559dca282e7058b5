//! Ballot files: a JSON array of ballots, or long-form CSV with header
//! `voter_id,dim,position,votes` and one row per allocation.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Allocation, Ballot};

#[derive(Debug, Serialize, Deserialize)]
struct BallotRow {
    voter_id: String,
    dim: usize,
    position: f64,
    votes: f64,
}

pub fn read_ballots_json<R: Read>(reader: R) -> Result<Vec<Ballot>> {
    serde_json::from_reader(reader).map_err(|e| Error::Format(e.to_string()))
}

/// Reads long-form CSV. Rows of one voter may appear in any order but must
/// cover dimensions `0..k` exactly once.
pub fn read_ballots_csv<R: Read>(reader: R) -> Result<Vec<Ballot>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut order = Vec::new();
    let mut rows: BTreeMap<String, BTreeMap<usize, Allocation>> = BTreeMap::new();
    for record in rdr.deserialize::<BallotRow>() {
        let row = record.map_err(|e| Error::Format(e.to_string()))?;
        let dims = rows.entry(row.voter_id.clone()).or_insert_with(|| {
            order.push(row.voter_id.clone());
            BTreeMap::new()
        });
        if dims.insert(row.dim, Allocation::new(row.position, row.votes)).is_some() {
            return Err(Error::Format(format!(
                "voter {} has dimension {} twice",
                row.voter_id, row.dim
            )));
        }
    }
    order
        .into_iter()
        .map(|id| {
            let dims = rows.remove(&id).expect("recorded voter");
            if dims.keys().copied().ne(0..dims.len()) {
                return Err(Error::Format(format!("voter {id} has non-contiguous dimensions")));
            }
            Ok(Ballot::new(id, dims.into_values().collect()))
        })
        .collect()
}

pub fn write_ballots_csv<W: Write>(ballots: &[Ballot], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for b in ballots {
        for (dim, a) in b.allocations.iter().enumerate() {
            wtr.serialize(BallotRow {
                voter_id: b.voter_id.clone(),
                dim,
                position: a.position,
                votes: a.votes,
            })
            .map_err(|e| Error::Format(e.to_string()))?;
        }
    }
    wtr.flush().map_err(|e| Error::Format(e.to_string()))
}

/// Loads a ballot file, choosing the format from the extension (`.csv` is
/// CSV, anything else JSON).
pub fn load_ballots(path: &Path) -> Result<Vec<Ballot>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        read_ballots_csv(file)
    } else {
        read_ballots_json(std::io::BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_groups_rows_by_voter() {
        let text = "voter_id,dim,position,votes\n\
                    a,1,1.0,2\n\
                    a,0,0.9,2\n\
                    b,0,0.5,4\n\
                    b,1,1.0,0\n";
        let ballots = read_ballots_csv(text.as_bytes()).unwrap();
        assert_eq!(
            ballots,
            vec![
                Ballot::from_pairs("a", &[(0.9, 2.0), (1.0, 2.0)]),
                Ballot::from_pairs("b", &[(0.5, 4.0), (1.0, 0.0)]),
            ]
        );
    }

    #[test]
    fn csv_rejects_gaps_and_repeats() {
        let gap = "voter_id,dim,position,votes\na,0,1,1\na,2,1,1\n";
        assert!(read_ballots_csv(gap.as_bytes()).is_err());
        let dup = "voter_id,dim,position,votes\na,0,1,1\na,0,1,1\n";
        assert!(read_ballots_csv(dup.as_bytes()).is_err());
        let bad = "voter_id,dim,position,votes\na,x,1,1\n";
        assert!(read_ballots_csv(bad.as_bytes()).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let ballots = vec![
            Ballot::from_pairs("v1", &[(0.25, 1.5), (-3.0, 0.0)]),
            Ballot::from_pairs("v2", &[(1.0, 0.0), (2.0, 7.0)]),
        ];
        let mut buf = Vec::new();
        write_ballots_csv(&ballots, &mut buf).unwrap();
        assert_eq!(read_ballots_csv(buf.as_slice()).unwrap(), ballots);
    }

    #[test]
    fn json_array() {
        let text = r#"[{"voter_id":"a","allocations":[{"position":0.5,"votes":4}]}]"#;
        let ballots = read_ballots_json(text.as_bytes()).unwrap();
        assert_eq!(ballots, vec![Ballot::from_pairs("a", &[(0.5, 4.0)])]);
        assert!(read_ballots_json("{".as_bytes()).is_err());
    }
}
