//! Triaxial segments: borrowed views into a recording and owned frames.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// A borrowed triaxial segment. All three slices have the same length.
#[derive(Clone, Copy, Debug)]
pub struct FrameView<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub z: &'a [f64],
}

impl<'a> FrameView<'a> {
    /// Panics if the slices differ in length.
    pub fn new(x: &'a [f64], y: &'a [f64], z: &'a [f64]) -> Self {
        assert!(
            x.len() == y.len() && y.len() == z.len(),
            "triaxial channels must have equal length"
        );
        FrameView { x, y, z }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn axis(&self, axis: Axis) -> &'a [f64] {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
            Axis::Z => self.z,
        }
    }

    pub fn point(&self, i: usize) -> [f64; 3] {
        [self.x[i], self.y[i], self.z[i]]
    }

    pub fn points(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    pub fn to_owned(&self) -> Frame {
        Frame {
            x: self.x.to_vec(),
            y: self.y.to_vec(),
            z: self.z.to_vec(),
        }
    }
}

/// An owned triaxial segment.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Frame {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl Frame {
    pub fn from_points(points: &[[f64; 3]]) -> Self {
        Frame {
            x: points.iter().map(|p| p[0]).collect(),
            y: points.iter().map(|p| p[1]).collect(),
            z: points.iter().map(|p| p[2]).collect(),
        }
    }

    pub fn view(&self) -> FrameView<'_> {
        FrameView::new(&self.x, &self.y, &self.z)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// The same samples in reverse time order.
    pub fn reversed(&self) -> Frame {
        let rev = |v: &[f64]| v.iter().rev().copied().collect::<Vec<_>>();
        Frame {
            x: rev(&self.x),
            y: rev(&self.y),
            z: rev(&self.z),
        }
    }
}
