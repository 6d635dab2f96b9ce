//! The universal object set and the two descriptor vocabularies.
//!
//! Everything here is loaded from plain files and immutable afterwards,
//! except for the per-descriptor active flags that the mining loop switches
//! off as descriptors get used up.

use std::collections::HashMap;
use std::io::BufRead;

use serde::Deserialize;

use crate::bitset::BitSet;
use crate::error::{Error, Result};

/// Which of the two vocabularies a descriptor or expression belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FamilyId {
    X,
    Y,
}

impl FamilyId {
    pub fn opposite(self) -> FamilyId {
        match self {
            FamilyId::X => FamilyId::Y,
            FamilyId::Y => FamilyId::X,
        }
    }
}

impl std::fmt::Display for FamilyId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FamilyId::X => write!(f, "X"),
            FamilyId::Y => write!(f, "Y"),
        }
    }
}

/// The universal set O with its canonical object ordering.
///
/// Positions are assigned in file order and never change; all bitsets and
/// state representations rely on that ordering staying fixed.
#[derive(Clone, Debug)]
pub struct ObjectUniverse {
    objects: Vec<String>,
    index: HashMap<String, usize>,
}

impl ObjectUniverse {
    /// Reads one identifier per line. Blank lines are skipped.
    pub fn load(reader: impl BufRead) -> Result<Self> {
        let mut objects = Vec::new();
        let mut index = HashMap::new();
        for line in reader.lines() {
            let line = line?;
            let id = line.trim();
            if id.is_empty() {
                continue;
            }
            if index.insert(id.to_string(), objects.len()).is_some() {
                return Err(Error::DuplicateObject(id.to_string()));
            }
            objects.push(id.to_string());
        }
        if objects.is_empty() {
            return Err(Error::EmptyUniverse);
        }
        Ok(ObjectUniverse { objects, index })
    }

    pub fn from_names<I: IntoIterator<Item = S>, S: Into<String>>(names: I) -> Result<Self> {
        let joined: Vec<String> = names.into_iter().map(Into::into).collect();
        ObjectUniverse::load(joined.join("\n").as_bytes())
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn name(&self, pos: usize) -> &str {
        &self.objects[pos]
    }

    pub fn full_set(&self) -> BitSet {
        BitSet::full(self.len())
    }

    /// Member names of `set` in canonical (position) order.
    pub fn names_of(&self, set: &BitSet) -> Vec<&str> {
        set.iter().map(|p| self.name(p)).collect()
    }
}

/// Range-descriptor provenance for buckets derived from a numeric column.
#[derive(Clone, Debug, PartialEq)]
pub struct BucketInfo {
    pub variable: String,
    pub boundary: f64,
}

/// A named proper, non-empty subset of the universe.
#[derive(Clone, Debug)]
pub struct Descriptor {
    pub name: String,
    pub members: BitSet,
    pub source_tag: String,
    pub bucket: Option<BucketInfo>,
}

/// One vocabulary: an ordered list of descriptors plus the active mask the
/// exploration policy flips off as descriptors participate in accepted
/// redescriptions.
#[derive(Clone, Debug)]
pub struct DescriptorFamily {
    pub family_id: FamilyId,
    descriptors: Vec<Descriptor>,
    active: Vec<bool>,
    by_name: HashMap<String, usize>,
}

impl DescriptorFamily {
    pub fn new(family_id: FamilyId) -> Self {
        DescriptorFamily {
            family_id,
            descriptors: Vec::new(),
            active: Vec::new(),
            by_name: HashMap::new(),
        }
    }

    /// Appends a descriptor, enforcing the proper-subset rule and name
    /// uniqueness.
    pub fn push(&mut self, descriptor: Descriptor) -> Result<()> {
        if !descriptor.members.is_proper_nonempty() {
            return Err(Error::NotProperSubset(descriptor.name));
        }
        if self.by_name.contains_key(&descriptor.name) {
            return Err(Error::DuplicateDescriptor(descriptor.name));
        }
        self.by_name
            .insert(descriptor.name.clone(), self.descriptors.len());
        self.descriptors.push(descriptor);
        self.active.push(true);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    pub fn descriptor(&self, idx: usize) -> &Descriptor {
        &self.descriptors[idx]
    }

    pub fn get(&self, idx: usize) -> Option<&Descriptor> {
        self.descriptors.get(idx)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Descriptor> {
        self.descriptors.iter()
    }

    pub fn position_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn is_active(&self, idx: usize) -> bool {
        self.active[idx]
    }

    pub fn deactivate(&mut self, idx: usize) {
        self.active[idx] = false;
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    pub fn active_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.active[i])
    }

    /// Errors unless the union of all descriptors equals the universe.
    pub fn verify_covering(&self, universe: &ObjectUniverse) -> Result<()> {
        let mut union = BitSet::new(universe.len());
        for d in &self.descriptors {
            union.or_with(&d.members);
        }
        if union.is_full() {
            Ok(())
        } else {
            let uncovered = union
                .not()
                .iter()
                .map(|p| universe.name(p).to_string())
                .collect();
            Err(Error::CoveringViolation {
                family: self.family_id,
                uncovered,
            })
        }
    }

    /// For a range descriptor, the next-narrower configured bucket on the
    /// same variable and side of zero, if one was generated.
    pub fn next_narrower_bucket(&self, idx: usize) -> Option<usize> {
        let info = self.descriptors[idx].bucket.as_ref()?;
        let mut best: Option<(f64, usize)> = None;
        for (i, d) in self.descriptors.iter().enumerate() {
            let Some(b) = d.bucket.as_ref() else { continue };
            if i == idx
                || b.variable != info.variable
                || b.boundary.signum() != info.boundary.signum()
            {
                continue;
            }
            if b.boundary.abs() < info.boundary.abs() {
                match best {
                    Some((abs, _)) if b.boundary.abs() <= abs => {}
                    _ => best = Some((b.boundary.abs(), i)),
                }
            }
        }
        best.map(|(_, i)| i)
    }

    /// Loads the record format: one `name<TAB>id1,id2,...` line per
    /// descriptor. Verifies the covering invariant.
    pub fn load_records(
        reader: impl BufRead,
        universe: &ObjectUniverse,
        family_id: FamilyId,
    ) -> Result<Self> {
        let mut family = DescriptorFamily::new(family_id);
        for line in reader.lines() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let (name, members) = line.split_once('\t').ok_or_else(|| {
                Error::MalformedInput(format!(
                    "expected `name<TAB>id1,id2,...` but got {line:?}"
                ))
            })?;
            let mut set = BitSet::new(universe.len());
            for id in members.split(',') {
                let id = id.trim();
                if id.is_empty() {
                    continue;
                }
                let pos = universe
                    .position(id)
                    .ok_or_else(|| Error::UnknownObject(id.to_string()))?;
                set.insert(pos);
            }
            family.push(Descriptor {
                name: name.trim().to_string(),
                members: set,
                source_tag: format!("{family_id}"),
                bucket: None,
            })?;
        }
        family.verify_covering(universe)?;
        Ok(family)
    }

    /// Loads the boolean-matrix alternative: CSV with a header row of
    /// descriptor names, object identifiers in the first column and cells
    /// in {0,1}.
    pub fn load_bool_matrix(
        reader: impl BufRead,
        universe: &ObjectUniverse,
        family_id: FamilyId,
    ) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::MalformedInput("empty boolean matrix".into()))??;
        let names: Vec<String> = header
            .trim_end_matches('\r')
            .split(',')
            .skip(1)
            .map(|s| s.trim().to_string())
            .collect();
        if names.is_empty() {
            return Err(Error::MalformedInput(
                "boolean matrix header has no descriptor columns".into(),
            ));
        }
        let mut sets = vec![BitSet::new(universe.len()); names.len()];
        for line in lines {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let mut cells = line.split(',');
            let id = cells.next().unwrap().trim();
            let pos = universe
                .position(id)
                .ok_or_else(|| Error::UnknownObject(id.to_string()))?;
            for (col, cell) in cells.enumerate() {
                if col >= names.len() {
                    return Err(Error::MalformedInput(format!(
                        "row {id:?} has more cells than the header"
                    )));
                }
                match cell.trim() {
                    "1" => sets[col].insert(pos),
                    "0" => {}
                    other => {
                        return Err(Error::MalformedInput(format!(
                            "cell {other:?} for object {id:?} is not 0 or 1"
                        )))
                    }
                }
            }
        }
        let mut family = DescriptorFamily::new(family_id);
        for (name, members) in names.into_iter().zip(sets) {
            family.push(Descriptor {
                name,
                members,
                source_tag: format!("{family_id}"),
                bucket: None,
            })?;
        }
        family.verify_covering(universe)?;
        Ok(family)
    }
}

/// Bucketization request for one numeric column.
///
/// Negative boundaries x produce the range [x, 0], positive boundaries the
/// range [0, x]; ranges on the same side of zero nest.
#[derive(Clone, Debug, Deserialize)]
pub struct BucketSpec {
    pub variable: String,
    pub boundaries: Vec<f64>,
}

impl BucketSpec {
    pub fn validate(&self) -> Result<()> {
        if self.boundaries.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "bucket spec for {:?} has no boundaries",
                self.variable
            )));
        }
        for w in self.boundaries.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::InvalidConfig(format!(
                    "boundaries for {:?} must be strictly increasing",
                    self.variable
                )));
            }
        }
        Ok(())
    }

    /// Parses a JSON array of `{"variable": ..., "boundaries": [...]}`.
    pub fn load_specs(reader: impl std::io::Read) -> Result<Vec<BucketSpec>> {
        let specs: Vec<BucketSpec> = serde_json::from_reader(reader)
            .map_err(|e| Error::MalformedInput(format!("bucket spec: {e}")))?;
        for s in &specs {
            s.validate()?;
        }
        Ok(specs)
    }
}

/// A numeric table, rows keyed by object identifier.
#[derive(Clone, Debug)]
pub struct NumericMatrix {
    pub columns: Vec<String>,
    /// values[column][object position]
    pub values: Vec<Vec<f64>>,
}

impl NumericMatrix {
    /// Loads a CSV whose first column is the object identifier and whose
    /// remaining columns are numeric. Every universe object must appear
    /// exactly once.
    pub fn load(reader: impl BufRead, universe: &ObjectUniverse) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::MalformedInput("empty numeric matrix".into()))??;
        let columns: Vec<String> = header
            .trim_end_matches('\r')
            .split(',')
            .skip(1)
            .map(|s| s.trim().to_string())
            .collect();
        if columns.is_empty() {
            return Err(Error::MalformedInput(
                "numeric matrix header has no value columns".into(),
            ));
        }
        let mut values = vec![vec![f64::NAN; universe.len()]; columns.len()];
        let mut seen = BitSet::new(universe.len());
        for line in lines {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let mut cells = line.split(',');
            let id = cells.next().unwrap().trim();
            let pos = universe
                .position(id)
                .ok_or_else(|| Error::UnknownObject(id.to_string()))?;
            if seen.contains(pos) {
                return Err(Error::DuplicateObject(id.to_string()));
            }
            seen.insert(pos);
            for (col, cell) in cells.enumerate() {
                if col >= columns.len() {
                    return Err(Error::MalformedInput(format!(
                        "row {id:?} has more cells than the header"
                    )));
                }
                let v: f64 = cell.trim().parse().map_err(|_| Error::NonNumericCell {
                    object: id.to_string(),
                    column: columns[col].clone(),
                    value: cell.trim().to_string(),
                })?;
                values[col][pos] = v;
            }
        }
        if !seen.is_full() {
            let missing = seen
                .not()
                .iter()
                .map(|p| universe.name(p).to_string())
                .collect::<Vec<_>>()
                .join(", ");
            return Err(Error::MalformedInput(format!(
                "numeric matrix is missing rows for: {missing}"
            )));
        }
        Ok(NumericMatrix { columns, values })
    }

    fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .position(|c| c == name)
            .map(|i| self.values[i].as_slice())
    }
}

fn bucket_name(variable: &str, boundary: f64) -> String {
    if boundary < 0.0 {
        format!("{variable}∈[{boundary},0]")
    } else {
        format!("{variable}∈[0,{boundary}]")
    }
}

/// Derives range descriptors from a numeric matrix.
///
/// For each boundary x the emitted descriptor holds the objects whose value
/// lies in the closed range anchored at zero. Descriptors that would be
/// empty or cover the whole universe are dropped and reported in the second
/// return value. The covering invariant is *not* checked here; callers that
/// feed the result to the miner must check it (the engine does).
pub fn bucketize_numeric(
    matrix: &NumericMatrix,
    specs: &[BucketSpec],
    universe: &ObjectUniverse,
    family_id: FamilyId,
) -> Result<(DescriptorFamily, Vec<String>)> {
    let mut family = DescriptorFamily::new(family_id);
    let mut dropped = Vec::new();
    for spec in specs {
        spec.validate()?;
        let col = matrix
            .column(&spec.variable)
            .ok_or_else(|| Error::MissingColumn(spec.variable.clone()))?;
        for &boundary in &spec.boundaries {
            let (lo, hi) = if boundary < 0.0 {
                (boundary, 0.0)
            } else {
                (0.0, boundary)
            };
            let members = BitSet::from_positions(
                universe.len(),
                col.iter()
                    .enumerate()
                    .filter(|(_, &v)| lo <= v && v <= hi)
                    .map(|(p, _)| p),
            );
            let name = bucket_name(&spec.variable, boundary);
            if !members.is_proper_nonempty() {
                dropped.push(name);
                continue;
            }
            family.push(Descriptor {
                name,
                members,
                source_tag: format!("bucket:{}", spec.variable),
                bucket: Some(BucketInfo {
                    variable: spec.variable.clone(),
                    boundary,
                }),
            })?;
        }
    }
    Ok((family, dropped))
}

/// The loaded inputs of one mining run: the universe and both vocabularies.
#[derive(Clone, Debug)]
pub struct Store {
    pub universe: ObjectUniverse,
    pub x: DescriptorFamily,
    pub y: DescriptorFamily,
}

impl Store {
    pub fn new(universe: ObjectUniverse, x: DescriptorFamily, y: DescriptorFamily) -> Self {
        debug_assert_eq!(x.family_id, FamilyId::X);
        debug_assert_eq!(y.family_id, FamilyId::Y);
        Store { universe, x, y }
    }

    pub fn family(&self, id: FamilyId) -> &DescriptorFamily {
        match id {
            FamilyId::X => &self.x,
            FamilyId::Y => &self.y,
        }
    }

    pub fn family_mut(&mut self, id: FamilyId) -> &mut DescriptorFamily {
        match id {
            FamilyId::X => &mut self.x,
            FamilyId::Y => &mut self.y,
        }
    }
}
