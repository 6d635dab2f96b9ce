//! Shared fixtures and instance generators for the integration and
//! acceptance suites.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use redescriptions::bitset::BitSet;
use redescriptions::store::{Descriptor, DescriptorFamily, FamilyId, ObjectUniverse, Store};

pub fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn reader(name: &str) -> BufReader<File> {
    BufReader::new(File::open(fixture_path(name)).expect("fixture exists"))
}

pub fn load_store(universe: &str, x: &str, y: &str) -> Store {
    let universe = ObjectUniverse::load(reader(universe)).unwrap();
    let x = DescriptorFamily::load_records(reader(x), &universe, FamilyId::X).unwrap();
    let y = DescriptorFamily::load_records(reader(y), &universe, FamilyId::Y).unwrap();
    Store::new(universe, x, y)
}

pub fn fig1_store() -> Store {
    load_store("fig1_universe.txt", "fig1_x.tsv", "fig1_y.tsv")
}

pub fn countries_store() -> Store {
    load_store(
        "countries_universe.txt",
        "countries_x.tsv",
        "countries_y.tsv",
    )
}

fn push(family: &mut DescriptorFamily, name: String, members: BitSet) {
    family
        .push(Descriptor {
            name,
            members,
            source_tag: String::new(),
            bucket: None,
        })
        .expect("valid descriptor");
}

/// Random proper non-empty subsets with no covering requirement (the
/// counting structures don't need one). Universe must have >= 2 objects.
pub fn random_family(
    rng: &mut ChaCha8Rng,
    universe_len: usize,
    n_desc: usize,
    family_id: FamilyId,
    prefix: &str,
) -> DescriptorFamily {
    assert!(universe_len >= 2 || n_desc == 0);
    let mut family = DescriptorFamily::new(family_id);
    for i in 0..n_desc {
        loop {
            let s = BitSet::from_positions(
                universe_len,
                (0..universe_len).filter(|_| rng.gen_bool(0.5)),
            );
            if s.is_proper_nonempty() {
                push(&mut family, format!("{prefix}{i}"), s);
                break;
            }
        }
    }
    family
}

/// A random family of proper non-empty subsets that covers the universe:
/// uncovered objects are patched into descriptors that can still absorb
/// them, regenerating from scratch if every patch would break the
/// proper-subset rule.
pub fn random_covering_family(
    rng: &mut ChaCha8Rng,
    universe_len: usize,
    n_desc: usize,
    family_id: FamilyId,
    prefix: &str,
) -> DescriptorFamily {
    'outer: loop {
        let mut sets: Vec<BitSet> = Vec::with_capacity(n_desc);
        for _ in 0..n_desc {
            loop {
                let s = BitSet::from_positions(
                    universe_len,
                    (0..universe_len).filter(|_| rng.gen_bool(0.5)),
                );
                if s.is_proper_nonempty() {
                    sets.push(s);
                    break;
                }
            }
        }
        let mut union = BitSet::new(universe_len);
        for s in &sets {
            union.or_with(s);
        }
        for pos in union.not().iter() {
            let target = (0..n_desc).find(|&i| sets[i].count() + 1 < universe_len);
            match target {
                Some(i) => sets[i].insert(pos),
                None => continue 'outer,
            }
        }
        let mut family = DescriptorFamily::new(family_id);
        for (i, members) in sets.into_iter().enumerate() {
            push(&mut family, format!("{prefix}{i}"), members);
        }
        return family;
    }
}

/// A small random mining instance for oracle-soundness checks.
pub fn random_store(rng: &mut ChaCha8Rng, n_objects: usize, n_x: usize, n_y: usize) -> Store {
    let universe =
        ObjectUniverse::from_names((0..n_objects).map(|i| format!("o{i}"))).unwrap();
    let x = random_covering_family(rng, n_objects, n_x, FamilyId::X, "X");
    let y = random_covering_family(rng, n_objects, n_y, FamilyId::Y, "Y");
    Store::new(universe, x, y)
}

pub struct PlantedInstance {
    pub store: Store,
    /// The support both planted conjunctions evaluate to.
    pub support: BitSet,
}

/// Plants one exact conjunctive redescription among noise.
///
/// The planted support S gets 26 of 100 objects. Each side holds two
/// descriptors equal to S plus a small disjoint fringe, so the pairwise
/// intersections are exactly S, and 38 noise descriptors drawn entirely
/// from the complement of S, sized above the planted ones so the greedy
/// cover spends them first.
pub fn planted_instance(seed: u64) -> PlantedInstance {
    let n = 100;
    let support_size = 26;
    let fringe_size = 4;
    let noise_count = 38;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1));

    let mut positions: Vec<usize> = (0..n).collect();
    positions.shuffle(&mut rng);
    let support_vec: Vec<usize> = positions[..support_size].to_vec();
    let rest: Vec<usize> = positions[support_size..].to_vec();
    let support = BitSet::from_positions(n, support_vec.iter().copied());

    let mut planted_pair = |rng: &mut ChaCha8Rng| -> (BitSet, BitSet) {
        let mut pool = rest.clone();
        pool.shuffle(rng);
        let first = BitSet::from_positions(
            n,
            support_vec.iter().copied().chain(pool[..fringe_size].iter().copied()),
        );
        let second = BitSet::from_positions(
            n,
            support_vec
                .iter()
                .copied()
                .chain(pool[fringe_size..2 * fringe_size].iter().copied()),
        );
        (first, second)
    };
    let (d1, d2) = planted_pair(&mut rng);
    let (g1, g2) = planted_pair(&mut rng);

    let mut noise = |rng: &mut ChaCha8Rng| -> Vec<BitSet> {
        let mut sets = Vec::with_capacity(noise_count);
        for _ in 0..noise_count {
            let size = rng.gen_range(31..=45);
            let mut pool = rest.clone();
            pool.shuffle(rng);
            sets.push(BitSet::from_positions(n, pool[..size].iter().copied()));
        }
        // cover the complement of S
        let mut union = BitSet::new(n);
        for s in &sets {
            union.or_with(s);
        }
        for pos in rest.iter().copied() {
            if !union.contains(pos) {
                sets.last_mut().unwrap().insert(pos);
            }
        }
        sets
    };
    let x_noise = noise(&mut rng);
    let y_noise = noise(&mut rng);

    let mut build = |family_id: FamilyId,
                     planted: (BitSet, BitSet),
                     noise: Vec<BitSet>,
                     rng: &mut ChaCha8Rng| {
        let prefix = family_id.to_string();
        let mut members: Vec<BitSet> = noise;
        let mut order: Vec<usize> = (0..members.len() + 2).collect();
        members.push(planted.0);
        members.push(planted.1);
        order.shuffle(rng);
        let mut family = DescriptorFamily::new(family_id);
        for (i, &source) in order.iter().enumerate() {
            push(&mut family, format!("{prefix}{i}"), members[source].clone());
        }
        family
    };
    let x = build(FamilyId::X, (d1, d2), x_noise, &mut rng);
    let y = build(FamilyId::Y, (g1, g2), y_noise, &mut rng);

    let universe = ObjectUniverse::from_names((0..n).map(|i| format!("g{i:03}"))).unwrap();
    PlantedInstance {
        store: Store::new(universe, x, y),
        support,
    }
}

/// A synthetic instance at the scale of a real gene-expression screen:
/// 74 objects, 824 descriptors split over the two sides.
pub fn paper_scale_store(seed: u64) -> Store {
    let n = 74;
    let per_side = 412;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let universe = ObjectUniverse::from_names((0..n).map(|i| format!("orf{i:03}"))).unwrap();
    let mut build = |family_id: FamilyId| {
        let prefix = family_id.to_string();
        let mut family = DescriptorFamily::new(family_id);
        for i in 0..per_side {
            let size = rng.gen_range(4..=70);
            let mut positions: Vec<usize> = (0..n).collect();
            positions.shuffle(&mut rng);
            let members = BitSet::from_positions(n, positions[..size].iter().copied());
            push(&mut family, format!("{prefix}{i}"), members);
        }
        family
    };
    let x = build(FamilyId::X);
    let y = build(FamilyId::Y);
    let store = Store::new(universe, x, y);
    store.x.verify_covering(&store.universe).expect("412 random subsets cover");
    store.y.verify_covering(&store.universe).expect("412 random subsets cover");
    store
}
