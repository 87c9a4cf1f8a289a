//! Channel realizations as JSON for replaying a trial elsewhere.

use isabc_core::channel::{ChannelError, ChannelSet, Topology};
use isabc_core::numerics::{CMatrix, C64};
use serde::{Deserialize, Serialize};

type Pair = [f64; 2];

fn pairs(v: &[C64]) -> Vec<Pair> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn complex(v: &[Pair]) -> Vec<C64> {
    v.iter().map(|p| C64::new(p[0], p[1])).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologyFile {
    pub bs: Pair,
    pub reader: Pair,
    pub users: Vec<Pair>,
    pub tags: Vec<Pair>,
    pub tag_angles_rad: Vec<f64>,
}

/// Row-major complex matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Pair>,
}

/// Primitive links; cascaded channels are rebuilt on import.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub topology: TopologyFile,
    pub f0: Vec<Pair>,
    pub f: Vec<Vec<Pair>>,
    pub g_f: Vec<Vec<Pair>>,
    pub g_b: Vec<Vec<Pair>>,
    /// `v[l][k]`, tag k to user l.
    pub v: Vec<Vec<Pair>>,
    pub q: Vec<Pair>,
    pub g_si: MatrixFile,
}

impl ChannelFile {
    pub fn from_channel(ch: &ChannelSet) -> Self {
        let t = &ch.topology;
        let pt = |p: (f64, f64)| [p.0, p.1];
        let g = &ch.g_si;
        let mut data = Vec::with_capacity(g.rows() * g.cols());
        for i in 0..g.rows() {
            for j in 0..g.cols() {
                data.push([g[(i, j)].re, g[(i, j)].im]);
            }
        }
        ChannelFile {
            topology: TopologyFile {
                bs: pt(t.bs_position),
                reader: pt(t.reader_position),
                users: t.user_positions.iter().map(|&p| pt(p)).collect(),
                tags: t.tag_positions.iter().map(|&p| pt(p)).collect(),
                tag_angles_rad: t.tag_angles.clone(),
            },
            f0: pairs(&ch.f0),
            f: ch.f.iter().map(|x| pairs(x)).collect(),
            g_f: ch.g_f.iter().map(|x| pairs(x)).collect(),
            g_b: ch.g_b.iter().map(|x| pairs(x)).collect(),
            v: ch.v.iter().map(|x| pairs(x)).collect(),
            q: pairs(&ch.q),
            g_si: MatrixFile {
                rows: g.rows(),
                cols: g.cols(),
                data,
            },
        }
    }

    pub fn to_channel(&self) -> Result<ChannelSet, ChannelError> {
        let t = &self.topology;
        let pt = |p: &Pair| (p[0], p[1]);
        let mut topology = Topology::from_positions(
            pt(&t.bs),
            pt(&t.reader),
            t.users.iter().map(pt).collect(),
            t.tags.iter().map(pt).collect(),
        );
        if t.tag_angles_rad.len() == topology.tag_angles.len() {
            topology.tag_angles = t.tag_angles_rad.clone();
        }
        let m = &self.g_si;
        if m.data.len() != m.rows * m.cols {
            return Err(ChannelError::Shape("self-interference matrix size"));
        }
        let g_si = CMatrix::from_fn(m.rows, m.cols, |i, j| {
            let p = m.data[i * m.cols + j];
            C64::new(p[0], p[1])
        });
        ChannelSet::from_parts(
            topology,
            complex(&self.f0),
            self.f.iter().map(|x| complex(x)).collect(),
            self.g_f.iter().map(|x| complex(x)).collect(),
            self.g_b.iter().map(|x| complex(x)).collect(),
            self.v.iter().map(|x| complex(x)).collect(),
            complex(&self.q),
            g_si,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trial::build_channel;
    use isabc_core::system::SystemConfig;

    #[test]
    fn json_round_trip_is_exact() {
        let ch = build_channel(&SystemConfig::default(), 11).unwrap();
        let text = serde_json::to_string(&ChannelFile::from_channel(&ch)).unwrap();
        let back: ChannelFile = serde_json::from_str(&text).unwrap();
        let ch2 = back.to_channel().unwrap();
        assert_eq!(ch2.f0, ch.f0);
        assert_eq!(ch2.h, ch.h);
        assert_eq!(ch2.h_tag, ch.h_tag);
        assert_eq!(ch2.g_si, ch.g_si);
        assert_eq!(ch2.topology, ch.topology);
    }

    #[test]
    fn truncated_matrix_is_rejected() {
        let ch = build_channel(&SystemConfig::default(), 1).unwrap();
        let mut f = ChannelFile::from_channel(&ch);
        f.g_si.data.pop();
        assert!(f.to_channel().is_err());
    }
}
