use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::holonomy::representation::Representation;
use crate::holonomy::spectral::{eigen_data_with_inverse, EigenData};
use crate::holonomy::words::{GroupElement, WordBall};

/// Classes whose shortest word is within this many letters of the ball radius
/// may be split (conjugating paths leave the ball) and are not counted as
/// complete.
pub const RELIABILITY_MARGIN: usize = 8;

/// Relative tolerance for translation-length divisibility.
pub const DIVISIBILITY_TOL: f64 = 1e-8;

/// Conjugacy class of a proximal orientation-preserving element.
#[derive(Debug, Clone)]
pub struct ConjugacyClass {
    /// `(round(tr g, 8), round(tr g⁻¹, 8))`; equal for conjugate elements.
    pub key: (f64, f64),
    /// Element of the class with the shortest (then lexicographically first) word.
    pub representative: GroupElement,
    pub eigen: EigenData,
    /// Spectral data of the inverse of the representative.
    pub inverse_eigen: EigenData,
    /// Number of elements of the ball that fall in this class.
    pub multiplicity: usize,
    /// Whether the class is not a proper power of another class.
    pub primitive: bool,
    /// `(root class, k)` when the class is the k-th power of another.
    pub power_of: Option<(usize, u32)>,
    /// Class of the inverse elements, when it is inside the ball.
    pub inverse_class: Option<usize>,
    /// Whether the shortest word is short enough for the class to be complete.
    pub reliable: bool,
}

/// Census of conjugacy classes of proximal elements in a ball of the
/// orientation-preserving subgroup.
#[derive(Debug, Clone)]
pub struct Census {
    pub classes: Vec<ConjugacyClass>,
    /// Radius in rotation letters (pairs of reflections).
    pub rotation_length: usize,
    pub ball_size: usize,
    /// Ball elements skipped because they are not proximal (identity, elliptic).
    pub skipped_non_proximal: usize,
    /// Number of classes sharing their trace key with another class.
    pub key_collisions: usize,
    /// Near-collisions reported by the deduplicating ball.
    pub near_collisions: usize,
    /// Primitivity decided by trace comparison because the power was outside the ball.
    pub trace_only_primitivity: usize,
}

impl Census {
    pub fn primitive(&self) -> impl Iterator<Item = &ConjugacyClass> {
        self.classes.iter().filter(|c| c.primitive)
    }

    /// Largest word length (in reflection letters) at which classes are complete.
    pub fn reliable_word_length(&self) -> usize {
        (2 * self.rotation_length).saturating_sub(RELIABILITY_MARGIN)
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Union keeping the smaller index as root, so roots are the earliest
    /// (shortest-word) members.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

fn round8(x: f64) -> f64 {
    (x * 1e8).round() / 1e8
}

/// Conjugacy census over the even-length words of reflection length at most
/// `2 L` (rotation length `L`).
///
/// Classes are the connected components of the ball under conjugation by the
/// generators; this separates conjugacy classes exactly up to ball truncation,
/// which only affects classes flagged unreliable.
pub fn conjugacy_census(rep: &Representation, rotation_length: usize) -> Result<Census> {
    if rotation_length < 1 {
        return Err(Error::InvalidParameter(
            "census length must be at least 1".into(),
        ));
    }
    let ball = WordBall::new(rep, 2 * rotation_length);
    census_from_ball(&ball, rotation_length)
}

/// Census from an already enumerated ball of reflection radius `2 L`.
pub fn census_from_ball(ball: &WordBall, rotation_length: usize) -> Result<Census> {
    let alphabet = ball.alphabet();
    let elements = ball.elements();
    let even: Vec<usize> = ball.even_elements().map(|(i, _)| i).collect();

    // Conjugation edges, computed in parallel and merged in index order.
    let edges: Vec<(usize, usize)> = even
        .par_iter()
        .flat_map_iter(|&i| {
            let g = elements[i].matrix();
            (0..alphabet.len())
                .filter_map(move |a| {
                    let s = &alphabet.letters[a];
                    let s_inv = &alphabet.letters[alphabet.inverse[a] as usize];
                    let h = s * g * s_inv;
                    ball.find(&h).map(|j| (i, j))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let mut uf = UnionFind::new(elements.len());
    for (i, j) in edges {
        uf.union(i, j);
    }

    // Group members by root in order of first appearance.
    let mut members: Vec<(usize, usize)> = Vec::new(); // (root, count)
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for &i in &even {
        let r = uf.find(i);
        let k = *slot.entry(r).or_insert_with(|| {
            members.push((r, 0));
            members.len() - 1
        });
        members[k].1 += 1;
    }

    let reliable_len = (2 * rotation_length).saturating_sub(RELIABILITY_MARGIN);
    type Spectral = (EigenData, EigenData, (f64, f64));
    let results: Vec<(usize, usize, Result<Spectral>)> = members
        .par_iter()
        .map(|&(root, count)| {
            let g = &elements[root];
            let inv = g.inverse(alphabet);
            let key = (round8(g.matrix().trace()), round8(inv.matrix().trace()));
            let res = eigen_data_with_inverse(g.matrix(), inv.matrix()).and_then(|e| {
                let ei = eigen_data_with_inverse(inv.matrix(), g.matrix())?;
                Ok((e, ei, key))
            });
            (root, count, res)
        })
        .collect();

    let mut skipped = 0;
    let mut classes = Vec::new();
    let mut root_to_class: HashMap<usize, usize> = HashMap::new();
    for (root, count, res) in results {
        match res {
            Ok((eigen, inverse_eigen, key)) => {
                root_to_class.insert(root, classes.len());
                classes.push(ConjugacyClass {
                    key,
                    representative: elements[root].clone(),
                    eigen,
                    inverse_eigen,
                    multiplicity: count,
                    primitive: true,
                    power_of: None,
                    inverse_class: None,
                    reliable: elements[root].word_length() <= reliable_len,
                });
            }
            Err(_) => skipped += count,
        }
    }

    // Sort by translation length then key for a stable, meaningful order.
    let mut order: Vec<usize> = (0..classes.len()).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (&classes[a], &classes[b]);
        ca.eigen
            .translation_length
            .total_cmp(&cb.eigen.translation_length)
            .then(ca.key.0.total_cmp(&cb.key.0))
            .then(ca.key.1.total_cmp(&cb.key.1))
            .then(ca.representative.word().cmp(cb.representative.word()))
    });
    let mut new_pos = vec![0; classes.len()];
    for (pos, &old) in order.iter().enumerate() {
        new_pos[old] = pos;
    }
    let mut sorted: Vec<Option<ConjugacyClass>> = vec![None; classes.len()];
    for (old, c) in classes.into_iter().enumerate() {
        sorted[new_pos[old]] = Some(c);
    }
    let mut classes: Vec<ConjugacyClass> = sorted.into_iter().map(|c| c.expect("filled")).collect();
    let class_of = |uf: &mut UnionFind, id: usize| -> Option<usize> {
        root_to_class.get(&uf.find(id)).map(|&c| new_pos[c])
    };

    // Inverse classes.
    for class in classes.iter_mut() {
        let inv = class.representative.inverse(alphabet);
        class.inverse_class = ball.find(inv.matrix()).and_then(|j| class_of(&mut uf, j));
    }

    // Primitivity: propose k from translation-length divisibility, confirm by
    // locating the k-th power of the candidate root inside this class.
    let lengths: Vec<f64> = classes.iter().map(|c| c.eigen.translation_length).collect();
    let mut trace_only = 0;
    for c in 0..classes.len() {
        let ell = lengths[c];
        'roots: for d in 0..c {
            let ratio = ell / lengths[d];
            let k = ratio.round();
            if k < 2.0 || (ratio - k).abs() > DIVISIBILITY_TOL * ratio {
                continue;
            }
            let k = k as u32;
            let h = &classes[d].representative;
            let mut word = Vec::with_capacity(h.word_length() * k as usize);
            for _ in 0..k {
                word.extend_from_slice(h.word());
            }
            let power = GroupElement::from_word(alphabet, &word);
            match ball.find(power.matrix()) {
                Some(j) => {
                    if class_of(&mut uf, j) == Some(c) {
                        classes[c].primitive = false;
                        classes[c].power_of = Some((d, k));
                        break 'roots;
                    }
                }
                None => {
                    let inv = power.inverse(alphabet);
                    let key = (round8(power.matrix().trace()), round8(inv.matrix().trace()));
                    if key == classes[c].key {
                        trace_only += 1;
                        classes[c].primitive = false;
                        classes[c].power_of = Some((d, k));
                        break 'roots;
                    }
                }
            }
        }
    }

    let mut key_count: HashMap<(u64, u64), usize> = HashMap::new();
    for c in &classes {
        *key_count
            .entry((c.key.0.to_bits(), c.key.1.to_bits()))
            .or_default() += 1;
    }
    let key_collisions = key_count.values().filter(|&&n| n > 1).sum();
    if trace_only > 0 {
        log::info!("{trace_only} classes flagged non-primitive by trace comparison only");
    }

    Ok(Census {
        classes,
        rotation_length,
        ball_size: elements.len(),
        skipped_non_proximal: skipped,
        key_collisions,
        near_collisions: ball.near_collisions(),
        trace_only_primitivity: trace_only,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holonomy::vinberg_triangle;

    #[test]
    fn fuchsian_classes_are_symmetric() {
        let rep = vinberg_triangle(3, 3, 4, 0.0).unwrap();
        let census = conjugacy_census(&rep, 6).unwrap();
        assert!(!census.classes.is_empty());
        for c in &census.classes {
            assert!(c.eigen.eta.abs() < 1e-8, "eta {}", c.eigen.eta);
        }
    }

    #[test]
    fn inverse_pairing_and_powers() {
        let rep = vinberg_triangle(3, 3, 4, 0.8).unwrap();
        let census = conjugacy_census(&rep, 8).unwrap();
        let mut some_power = false;
        for c in &census.classes {
            let s = 1.0 / c.eigen.alpha + 1.0 / c.inverse_eigen.alpha;
            assert!((s - 1.0).abs() < 1e-12);
            assert!((c.eigen.eta + c.inverse_eigen.eta).abs() < 1e-12);
            // Across classes the representatives differ, so only agreement up
            // to the conditioning of long products is expected.
            if let Some(i) = c.inverse_class {
                let e = &census.classes[i].eigen;
                let s = 1.0 / c.eigen.alpha + 1.0 / e.alpha;
                assert!((s - 1.0).abs() < 1e-8);
            }
            if let Some((d, k)) = c.power_of {
                some_power = true;
                let r = c.eigen.translation_length / census.classes[d].eigen.translation_length;
                assert!((r - k as f64).abs() < 1e-8);
            }
        }
        assert!(some_power);
        assert!(census.primitive().count() > 10);
    }
}
