//! Matrix interchange: a CSV of condensed triplets `(label_a, label_b, value)`
//! plus a sidecar file holding the label order. Floats are written in
//! shortest round-trip form, so a write/read cycle is bit-exact.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::DistanceMatrix;
use crate::error::{Error, Result};

/// `matrix.csv` -> `matrix.csv.labels`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".labels");
    PathBuf::from(s)
}

/// Writes the triplet CSV to `triplets` and the label order to `order`.
pub fn write_matrix_to(m: &DistanceMatrix, triplets: impl Write, order: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(triplets);
    w.write_record(["label_a", "label_b", "value"])?;
    let labels = m.labels();
    let mut k = 0;
    for i in 0..labels.len() {
        for j in (i + 1)..labels.len() {
            w.write_record([labels[i].as_str(), labels[j].as_str(), &m.values()[k].to_string()])?;
            k += 1;
        }
    }
    w.flush().map_err(|e| Error::io("<matrix>", e))?;
    write_labels(labels, order)
}

/// Label-order sidecar: a one-column CSV with a `label` header.
pub fn write_labels(labels: &[String], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label"])?;
    for l in labels {
        w.write_record([l])?;
    }
    w.flush().map_err(|e| Error::io("<labels>", e))?;
    Ok(())
}

pub fn read_labels(input: impl Read) -> Result<Vec<String>> {
    let mut r = csv::Reader::from_reader(input);
    r.records()
        .map(|row| {
            let row = row?;
            Ok(row.get(0).unwrap_or_default().to_string())
        })
        .collect()
}

/// Writes `path` and its sidecar (non-atomically).
pub fn write_matrix(path: &Path, m: &DistanceMatrix) -> Result<()> {
    let side = sidecar_path(path);
    let a = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let b = std::fs::File::create(&side).map_err(|e| Error::io(&side, e))?;
    write_matrix_to(m, a, b)
}

/// Reads a triplet CSV at `path` with the label order from its sidecar.
pub fn read_matrix(path: &Path) -> Result<DistanceMatrix> {
    let side = sidecar_path(path);
    let order = std::fs::File::open(&side).map_err(|e| Error::io(&side, e))?;
    let triplets = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_matrix_from(triplets, order)
}

pub fn read_matrix_from(triplets: impl Read, order: impl Read) -> Result<DistanceMatrix> {
    let labels = read_labels(order)?;
    let index: HashMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    if index.len() != labels.len() {
        return Err(Error::LabelMismatch("label order file repeats a label".into()));
    }
    let n = labels.len();
    let mut values = vec![f64::NAN; n * n.saturating_sub(1) / 2];
    let mut r = csv::Reader::from_reader(triplets);
    for row in r.records() {
        let row = row?;
        let field = |i: usize| row.get(i).unwrap_or_default();
        let lookup = |l: &str| {
            index
                .get(l)
                .copied()
                .ok_or_else(|| Error::LabelMismatch(format!("label {l:?} missing from label order")))
        };
        let (a, b) = (lookup(field(0))?, lookup(field(1))?);
        if a == b {
            return Err(Error::LabelMismatch(format!("self pair for {:?}", field(0))));
        }
        let v: f64 = field(2).parse().map_err(|_| Error::InvalidDistance {
            a: field(0).to_string(),
            b: field(1).to_string(),
            value: f64::NAN,
        })?;
        let k = super::condensed_index(n, a.min(b), a.max(b));
        if !values[k].is_nan() {
            return Err(Error::LabelMismatch(format!(
                "pair ({:?}, {:?}) listed twice",
                field(0),
                field(1)
            )));
        }
        values[k] = v;
    }
    if let Some(k) = values.iter().position(|v| v.is_nan()) {
        let (i, j) = pair_of(n, k);
        return Err(Error::LabelMismatch(format!(
            "pair ({:?}, {:?}) missing from matrix file",
            labels[i], labels[j]
        )));
    }
    DistanceMatrix::from_condensed(labels, values)
}

fn pair_of(n: usize, k: usize) -> (usize, usize) {
    let mut i = 0;
    let mut start = 0;
    while start + (n - i - 1) <= k {
        start += n - i - 1;
        i += 1;
    }
    (i, i + 1 + (k - start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn roundtrip(m: &DistanceMatrix) -> DistanceMatrix {
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_matrix_to(m, &mut a, &mut b).unwrap();
        read_matrix_from(a.as_slice(), b.as_slice()).unwrap()
    }

    #[test]
    fn format_is_plain_triplets() {
        let m = DistanceMatrix::from_condensed(
            vec!["a".into(), "b,c".into(), "d".into()],
            vec![0.1, 1.0 / 3.0, 2.0],
        )
        .unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_matrix_to(&m, &mut a, &mut b).unwrap();
        assert_eq!(
            String::from_utf8(a).unwrap(),
            "label_a,label_b,value\na,\"b,c\",0.1\na,d,0.3333333333333333\n\"b,c\",d,2\n"
        );
        assert_eq!(String::from_utf8(b).unwrap(), "label\na\n\"b,c\"\nd\n");
    }

    #[test]
    fn reader_checks_coverage() {
        let order = "label\na\nb\nc\n";
        let partial = "label_a,label_b,value\na,b,1\nb,c,1\n";
        assert!(matches!(
            read_matrix_from(partial.as_bytes(), order.as_bytes()),
            Err(Error::LabelMismatch(m)) if m.contains("\"a\", \"c\"")
        ));
        let twice = "label_a,label_b,value\na,b,1\nb,a,1\nb,c,1\na,c,1\n";
        assert!(read_matrix_from(twice.as_bytes(), order.as_bytes()).is_err());
        let swapped = "label_a,label_b,value\nc,a,0.5\nb,a,1\nc,b,0.25\n";
        let m = read_matrix_from(swapped.as_bytes(), order.as_bytes()).unwrap();
        assert_eq!(m.values(), [1.0, 0.5, 0.25]);
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("out/m.csv")), PathBuf::from("out/m.csv.labels"));
    }

    proptest! {
        #[test]
        fn roundtrip_is_bit_exact(bits in proptest::collection::vec(any::<u64>(), 10)) {
            let values: Vec<f64> = bits
                .iter()
                .map(|b| f64::from_bits(b >> 2).min(f64::MAX))
                .collect();
            let labels: Vec<String> = (0..5).map(|i| format!("l{i}")).collect();
            let m = DistanceMatrix::from_condensed(labels, values).unwrap();
            let back = roundtrip(&m);
            for (x, y) in m.values().iter().zip(back.values()) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}
