use std::collections::{HashMap, HashSet};
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// Purchases made by customers who searched one keyword.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordRecord {
    pub keyword: String,
    /// `(item label, count)`, items unique, counts ≥ 1, in first-seen order.
    pub purchases: Vec<(String, u64)>,
}

impl KeywordRecord {
    pub fn total(&self) -> u64 {
        self.purchases.iter().map(|(_, c)| c).sum()
    }
}

/// Keyword records in first-seen keyword order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RecordSet {
    records: Vec<KeywordRecord>,
}

impl RecordSet {
    pub fn new(records: Vec<KeywordRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.keyword.as_str()) {
                return Err(Error::InvalidRecord(format!("keyword {:?} appears twice", r.keyword)));
            }
            if r.purchases.is_empty() {
                return Err(Error::InvalidRecord(format!("keyword {:?} has no purchases", r.keyword)));
            }
            let mut items = HashSet::new();
            for (item, count) in &r.purchases {
                if *count == 0 {
                    return Err(Error::InvalidRecord(format!(
                        "keyword {:?}, item {item:?}: purchase count must be at least 1",
                        r.keyword
                    )));
                }
                if !items.insert(item.as_str()) {
                    return Err(Error::InvalidRecord(format!(
                        "keyword {:?} lists item {item:?} twice",
                        r.keyword
                    )));
                }
            }
        }
        Ok(RecordSet { records })
    }

    /// Builds records from `(keyword, item, count)` rows, summing repeated
    /// `(keyword, item)` rows.
    pub fn from_rows<I, K, L>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, L, u64)>,
        K: Into<String>,
        L: Into<String>,
    {
        let mut records: Vec<KeywordRecord> = Vec::new();
        let mut by_keyword: HashMap<String, (usize, HashMap<String, usize>)> = HashMap::new();
        for (keyword, item, count) in rows {
            let (keyword, item) = (keyword.into(), item.into());
            if count == 0 {
                return Err(Error::InvalidRecord(format!(
                    "keyword {keyword:?}, item {item:?}: purchase count must be at least 1"
                )));
            }
            let (ri, items) = by_keyword.entry(keyword.clone()).or_insert_with(|| {
                records.push(KeywordRecord {
                    keyword: keyword.clone(),
                    purchases: Vec::new(),
                });
                (records.len() - 1, HashMap::new())
            });
            let rec = &mut records[*ri];
            match items.get(&item) {
                Some(&pi) => rec.purchases[pi].1 += count,
                None => {
                    items.insert(item.clone(), rec.purchases.len());
                    rec.purchases.push((item, count));
                }
            }
        }
        RecordSet::new(records)
    }

    /// CSV with a header and columns `keyword,item_label,purchase_count`.
    pub fn read_from(input: impl Read) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let mut rows = Vec::new();
        for (line, row) in r.records().enumerate() {
            let row = row?;
            if row.len() < 3 {
                return Err(Error::InvalidRecord(format!(
                    "row {} needs keyword, item_label, purchase_count",
                    line + 1
                )));
            }
            let count: u64 = row[2].parse().map_err(|_| {
                Error::InvalidRecord(format!(
                    "row {}: purchase count {:?} is not a positive integer",
                    line + 1,
                    &row[2]
                ))
            })?;
            rows.push((row[0].to_string(), row[1].to_string(), count));
        }
        Self::from_rows(rows)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(f)
    }

    pub fn records(&self) -> &[KeywordRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Fails on the first purchased item outside `labels`.
    pub fn validate_items<'a>(&self, labels: impl IntoIterator<Item = &'a str>) -> Result<()> {
        let known: HashSet<&str> = labels.into_iter().collect();
        for r in &self.records {
            for (item, _) in &r.purchases {
                if !known.contains(item.as_str()) {
                    return Err(Error::UnknownItem {
                        keyword: r.keyword.clone(),
                        item: item.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Keeps only purchases of items in `labels`; keywords left without
    /// purchases are dropped.
    pub fn restricted_to<'a>(&self, labels: impl IntoIterator<Item = &'a str>) -> RecordSet {
        let keep: HashSet<&str> = labels.into_iter().collect();
        let records = self
            .records
            .iter()
            .filter_map(|r| {
                let purchases: Vec<(String, u64)> = r
                    .purchases
                    .iter()
                    .filter(|(item, _)| keep.contains(item.as_str()))
                    .cloned()
                    .collect();
                (!purchases.is_empty()).then(|| KeywordRecord {
                    keyword: r.keyword.clone(),
                    purchases,
                })
            })
            .collect();
        RecordSet { records }
    }
}
