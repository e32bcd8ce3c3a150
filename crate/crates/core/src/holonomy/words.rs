use std::collections::HashMap;

use crate::holonomy::representation::{projective_identity_residual, Representation};
use crate::projgeom::Mat3;

/// Entrywise tolerance under which two matrices are the same group element.
pub const DEDUP_TOL: f64 = 1e-8;
/// Upper end of the "suspicious near-collision" band.
pub const COLLISION_BAND: f64 = 1e-5;

/// A group element: its matrix (determinant ±1) and a shortest word.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    matrix: Mat3,
    word: Vec<u8>,
}

impl GroupElement {
    pub fn identity() -> Self {
        GroupElement {
            matrix: Mat3::identity(),
            word: Vec::new(),
        }
    }

    /// Build from a word over the representation's alphabet (generators, then
    /// inverses of non-involutive generators).
    pub fn from_word(alphabet: &Alphabet, word: &[u8]) -> Self {
        let mut m = Mat3::identity();
        for &a in word {
            m *= alphabet.letters[a as usize];
        }
        GroupElement {
            matrix: m,
            word: word.to_vec(),
        }
    }

    /// Wrap an arbitrary matrix (word left empty), rescaled to `|det| = 1`.
    pub fn from_matrix(m: Mat3) -> Self {
        let det = m.determinant();
        let s = if det != 0.0 { det.abs().cbrt() } else { 1.0 };
        GroupElement {
            matrix: m / s,
            word: Vec::new(),
        }
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.matrix
    }

    pub fn word(&self) -> &[u8] {
        &self.word
    }

    pub fn word_length(&self) -> usize {
        self.word.len()
    }

    /// Inverse, computed from the reversed inverted word when a word is known
    /// (more accurate than a numeric inverse for long words).
    pub fn inverse(&self, alphabet: &Alphabet) -> Self {
        if self.word.is_empty() {
            let inv = self.matrix.try_inverse().unwrap_or_else(Mat3::identity);
            return GroupElement {
                matrix: inv,
                word: Vec::new(),
            };
        }
        let word: Vec<u8> = self
            .word
            .iter()
            .rev()
            .map(|&a| alphabet.inverse[a as usize])
            .collect();
        GroupElement::from_word(alphabet, &word)
    }

    /// Word rendered with generator names, e.g. `r1.r2.r3`.
    pub fn word_string(&self, alphabet: &Alphabet) -> String {
        if self.word.is_empty() {
            return "e".into();
        }
        self.word
            .iter()
            .map(|&a| alphabet.names[a as usize].as_str())
            .collect::<Vec<_>>()
            .join(".")
    }
}

/// Letters of the free monoid used for enumeration: the generators followed
/// by formal inverses of those that are not involutions.
#[derive(Debug, Clone)]
pub struct Alphabet {
    pub letters: Vec<Mat3>,
    pub names: Vec<String>,
    /// `inverse[a]` is the letter representing the inverse of letter `a`.
    pub inverse: Vec<u8>,
}

impl Alphabet {
    pub fn new(rep: &Representation) -> Self {
        let mut letters = Vec::new();
        let mut names = Vec::new();
        let mut inverse = Vec::new();
        let n = rep.generators().len();
        let mut extra = Vec::new();
        for (i, g) in rep.generators().iter().enumerate() {
            letters.push(*g);
            names.push(rep.names()[i].clone());
            if projective_identity_residual(&(g * g)) <= 1e-10 {
                inverse.push(i as u8);
            } else {
                inverse.push((n + extra.len()) as u8);
                extra.push(i);
            }
        }
        for &i in &extra {
            let g = rep.generators()[i];
            letters.push(g.try_inverse().unwrap_or_else(Mat3::identity));
            names.push(format!("{}^-1", rep.names()[i]));
            inverse.push(i as u8);
        }
        Alphabet {
            letters,
            names,
            inverse,
        }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Parse a dotted word of generator names (`e` for the identity).
    pub fn parse_word(&self, s: &str) -> Option<Vec<u8>> {
        if s.trim() == "e" || s.trim().is_empty() {
            return Some(Vec::new());
        }
        s.split('.')
            .map(|t| {
                self.names
                    .iter()
                    .position(|n| n == t.trim())
                    .map(|i| i as u8)
            })
            .collect()
    }
}

/// Approximate hash index over 3×3 matrices: coarse grid cells with neighbour
/// probing near cell faces, confirmed by an entrywise comparison.
#[derive(Debug, Default, Clone)]
pub struct MatrixIndex {
    cells: HashMap<[i64; 9], Vec<usize>>,
}

const CELL: f64 = COLLISION_BAND;

/// Outcome of a lookup against the index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lookup {
    Found(usize),
    /// No match; the closest stored element in the band `(DEDUP_TOL, COLLISION_BAND]`.
    NearCollision(usize, f64),
    Absent,
}

impl MatrixIndex {
    fn key(m: &Mat3) -> [i64; 9] {
        let mut k = [0i64; 9];
        for (i, v) in m.iter().enumerate() {
            k[i] = (v / CELL).floor() as i64;
        }
        k
    }

    fn candidate_keys(m: &Mat3) -> Vec<[i64; 9]> {
        let base = Self::key(m);
        let mut keys = vec![base];
        let frac_tol = DEDUP_TOL / CELL;
        for (i, v) in m.iter().enumerate() {
            let c = v / CELL;
            let frac = c - c.floor();
            let shift = if frac < frac_tol {
                -1
            } else if frac > 1.0 - frac_tol {
                1
            } else {
                continue;
            };
            let n = keys.len();
            for j in 0..n {
                let mut k = keys[j];
                k[i] += shift;
                keys.push(k);
            }
        }
        keys
    }

    pub fn insert(&mut self, m: &Mat3, id: usize) {
        self.cells.entry(Self::key(m)).or_default().push(id);
    }

    /// Look up `m` (and `−m`, its projective twin) among `stored`.
    pub fn lookup(&self, m: &Mat3, stored: &[GroupElement]) -> Lookup {
        let mut near: Option<(usize, f64)> = None;
        for cand in [*m, -m] {
            for key in Self::candidate_keys(&cand) {
                if let Some(ids) = self.cells.get(&key) {
                    for &id in ids {
                        let d = (stored[id].matrix - cand).amax();
                        if d <= DEDUP_TOL {
                            return Lookup::Found(id);
                        }
                        if d <= COLLISION_BAND && near.is_none_or(|(_, b)| d < b) {
                            near = Some((id, d));
                        }
                    }
                }
            }
        }
        match near {
            Some((id, d)) => Lookup::NearCollision(id, d),
            None => Lookup::Absent,
        }
    }

    pub fn len(&self) -> usize {
        self.cells.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// All group elements of word length at most `max_len`, deduplicated, in
/// breadth-first order (by word length, then lexicographic word).
#[derive(Debug, Clone)]
pub struct WordBall {
    alphabet: Alphabet,
    elements: Vec<GroupElement>,
    index: MatrixIndex,
    max_len: usize,
    near_collisions: usize,
}

impl WordBall {
    pub fn new(rep: &Representation, max_len: usize) -> Self {
        let alphabet = Alphabet::new(rep);
        let mut elements = vec![GroupElement::identity()];
        let mut index = MatrixIndex::default();
        index.insert(&elements[0].matrix, 0);
        let mut near_collisions = 0;
        let mut layer = 0..1;
        for _ in 0..max_len {
            let start = elements.len();
            for id in layer.clone() {
                let last = elements[id].word.last().copied();
                for a in 0..alphabet.len() as u8 {
                    if let Some(l) = last {
                        if alphabet.inverse[l as usize] == a {
                            continue;
                        }
                    }
                    let m = elements[id].matrix * alphabet.letters[a as usize];
                    match index.lookup(&m, &elements) {
                        Lookup::Found(_) => {}
                        found => {
                            if let Lookup::NearCollision(other, d) = found {
                                near_collisions += 1;
                                log::warn!(
                                    "near-collision at distance {d:.3e} between a new word and element {other}"
                                );
                            }
                            let mut word = elements[id].word.clone();
                            word.push(a);
                            let nid = elements.len();
                            index.insert(&m, nid);
                            elements.push(GroupElement { matrix: m, word });
                        }
                    }
                }
            }
            layer = start..elements.len();
            if layer.is_empty() {
                break;
            }
        }
        WordBall {
            alphabet,
            elements,
            index,
            max_len,
            near_collisions,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    /// Number of suspicious near-collisions met while deduplicating.
    pub fn near_collisions(&self) -> usize {
        self.near_collisions
    }

    /// Index of the stored element equal (projectively, up to sign) to `m`.
    pub fn find(&self, m: &Mat3) -> Option<usize> {
        match self.index.lookup(m, &self.elements) {
            Lookup::Found(id) => Some(id),
            _ => None,
        }
    }

    /// Elements whose word length is even (orientation-preserving subgroup).
    pub fn even_elements(&self) -> impl Iterator<Item = (usize, &GroupElement)> {
        self.elements
            .iter()
            .enumerate()
            .filter(|(_, g)| g.word.len() % 2 == 0)
    }
}

/// Reduced words of length at most `max_len`, deduplicated as group elements,
/// each with a shortest representative word, ordered by (length, word).
pub fn word_ball(rep: &Representation, max_len: usize, even_only: bool) -> Vec<GroupElement> {
    WordBall::new(rep, max_len)
        .elements
        .into_iter()
        .filter(|g| !even_only || g.word.len() % 2 == 0)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holonomy::vinberg_triangle;

    #[test]
    fn small_balls() {
        let rep = vinberg_triangle(3, 3, 4, 0.0).unwrap();
        assert_eq!(word_ball(&rep, 1, false).len(), 4);
        let b2 = word_ball(&rep, 2, false);
        let alpha = Alphabet::new(&rep);
        let words: Vec<_> = b2.iter().map(|g| g.word_string(&alpha)).collect();
        assert!(words.contains(&"r1.r2".to_string()));
        assert!(words.contains(&"r2.r1".to_string()));
        assert_eq!(b2.len(), 10);
    }

    #[test]
    fn ball_strictly_grows() {
        let rep = vinberg_triangle(3, 3, 4, 0.5).unwrap();
        let sizes: Vec<usize> = (1..=8).map(|l| word_ball(&rep, l, false).len()).collect();
        for w in sizes.windows(2) {
            assert!(w[1] > w[0], "{sizes:?}");
        }
    }

    #[test]
    fn matrices_match_words_and_order_is_sorted() {
        let rep = vinberg_triangle(3, 3, 4, 0.8).unwrap();
        let ball = WordBall::new(&rep, 8);
        for g in ball.elements() {
            let h = GroupElement::from_word(ball.alphabet(), g.word());
            let s = h.matrix()[(0, 0)].abs().max(1.0);
            assert!((h.matrix() - g.matrix()).amax() / s < 1e-10);
        }
        for w in ball.elements().windows(2) {
            let (a, b) = (w[0].word(), w[1].word());
            assert!(a.len() < b.len() || (a.len() == b.len() && a < b));
        }
        assert_eq!(ball.near_collisions(), 0);
    }

    #[test]
    fn coxeter_relation_collapses() {
        let rep = vinberg_triangle(3, 3, 4, 0.8).unwrap();
        let ball = WordBall::new(&rep, 6);
        let alpha = ball.alphabet();
        // (r1 r2)^3 = 1 so r1.r2.r1 = r2.r1.r2 and only one survives.
        let a = GroupElement::from_word(alpha, &alpha.parse_word("r1.r2.r1").unwrap());
        let b = GroupElement::from_word(alpha, &alpha.parse_word("r2.r1.r2").unwrap());
        assert_eq!(ball.find(a.matrix()), ball.find(b.matrix()));
        assert!(ball.find(a.matrix()).is_some());
    }
}
