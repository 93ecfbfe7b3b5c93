use super::StructError;
use crate::bio_io::BackboneCoords;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphParams {
    /// Neighbor and edge cutoff in Å (strict `<`).
    pub radius: f64,
    pub max_neighbors: usize,
}

impl Default for GraphParams {
    fn default() -> Self {
        Self {
            radius: 10.0,
            max_neighbors: 40,
        }
    }
}

/// Star-shaped neighborhood of one anchor residue plus all short edges
/// among its members.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalStructureGraph {
    pub anchor: usize,
    /// Residue indices, nearest first.
    pub neighbors: Vec<usize>,
    /// Undirected edges as residue-index pairs `(a, b)` with `a < b`.
    pub edges: Vec<(usize, usize)>,
    /// CA positions of `[anchor, neighbors...]`.
    pub coords: Vec<[f64; 3]>,
}

impl LocalStructureGraph {
    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.anchor).chain(self.neighbors.iter().copied())
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let key = (a.min(b), a.max(b));
        self.edges.contains(&key)
    }
}

pub(crate) fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

pub fn build_local_graph(
    coords: &BackboneCoords,
    anchor: usize,
    params: &GraphParams,
) -> Result<LocalStructureGraph, StructError> {
    let ca = &coords.ca;
    if anchor >= ca.len() {
        return Err(StructError::AnchorOutOfRange { anchor, len: ca.len() });
    }
    let center = &ca[anchor];
    let mut candidates: Vec<(f64, usize)> = ca
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != anchor)
        .map(|(i, p)| (dist(center, p), i))
        .filter(|&(d, _)| d < params.radius)
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    candidates.truncate(params.max_neighbors);
    let neighbors: Vec<usize> = candidates.into_iter().map(|(_, i)| i).collect();

    let members: Vec<usize> = std::iter::once(anchor).chain(neighbors.iter().copied()).collect();
    let mut edges = Vec::new();
    for (x, &a) in members.iter().enumerate() {
        for &b in &members[x + 1..] {
            if dist(&ca[a], &ca[b]) < params.radius {
                edges.push((a.min(b), a.max(b)));
            }
        }
    }
    edges.sort_unstable();
    let coords = members.iter().map(|&i| ca[i]).collect();
    Ok(LocalStructureGraph {
        anchor,
        neighbors,
        edges,
        coords,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn isolated_residue() {
        let bb = BackboneCoords::from_ca(vec![[0.0; 3], [20.0, 0.0, 0.0], [0.0, 30.0, 0.0]]);
        let g = build_local_graph(&bb, 0, &GraphParams::default()).unwrap();
        assert!(g.neighbors.is_empty());
        assert!(g.edges.is_empty());
        assert_eq!(g.members().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn pair_within_radius() {
        let bb = BackboneCoords::from_ca(vec![[0.0; 3], [3.8, 0.0, 0.0]]);
        let g = build_local_graph(&bb, 0, &GraphParams::default()).unwrap();
        assert_eq!(g.neighbors, vec![1]);
        assert_eq!(g.edges, vec![(0, 1)]);
        assert!(g.has_edge(1, 0));
    }

    #[test]
    fn anchor_out_of_range() {
        let bb = BackboneCoords::from_ca(vec![[0.0; 3]]);
        assert!(build_local_graph(&bb, 1, &GraphParams::default()).is_err());
    }

    #[test]
    fn caps_at_nearest_forty() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut ca = vec![[0.0; 3]];
        for _ in 0..49 {
            // points inside a ball of radius 9.9
            loop {
                let p = [
                    rng.random_range(-9.9..9.9),
                    rng.random_range(-9.9..9.9),
                    rng.random_range(-9.9..9.9),
                ];
                if dist(&p, &[0.0; 3]) < 9.9 {
                    ca.push(p);
                    break;
                }
            }
        }
        let bb = BackboneCoords::from_ca(ca.clone());
        let g = build_local_graph(&bb, 0, &GraphParams::default()).unwrap();

        // brute force: sort every other residue by distance, keep 40
        let mut all: Vec<(f64, usize)> = (1..50).map(|i| (dist(&ca[0], &ca[i]), i)).collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let expected: Vec<usize> = all[..40].iter().map(|x| x.1).collect();
        assert_eq!(g.neighbors, expected);
        for &(a, b) in &g.edges {
            assert!(dist(&ca[a], &ca[b]) < 10.0);
        }
    }
}
