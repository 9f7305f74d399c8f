//! Waypoint chains shared by the percolation detour construction and the
//! skeleton error measurements.

use std::io::{self, Write};

use serde::Serialize;

use crate::geom::{dist, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LegKind {
    /// Final jump to the endpoint.
    Finish,
    /// Unobstructed step along the segment.
    Straight,
    /// Step to the last good point before an obstruction.
    Entry,
    /// Step along the outer boundary of an obstruction.
    Boundary,
    /// Step back onto the segment after a detour.
    Rejoin,
    /// Increment chosen greedily from a path.
    Greedy,
}

impl LegKind {
    pub fn name(self) -> &'static str {
        match self {
            LegKind::Finish => "finish",
            LegKind::Straight => "straight",
            LegKind::Entry => "entry",
            LegKind::Boundary => "boundary",
            LegKind::Rejoin => "rejoin",
            LegKind::Greedy => "greedy",
        }
    }
}

/// Bookkeeping for the increment ending at the waypoint of the same index
/// plus one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Leg {
    pub kind: LegKind,
    pub length: f64,
    pub good: Option<bool>,
    pub error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkeletonPath {
    pub dim: usize,
    pub waypoints: Vec<Point>,
    pub legs: Vec<Leg>,
    /// Obstruction component ids visited by detours, in order.
    pub detours: Vec<u32>,
}

impl SkeletonPath {
    pub fn new(dim: usize, start: Point) -> Self {
        SkeletonPath {
            dim,
            waypoints: vec![start],
            legs: Vec::new(),
            detours: Vec::new(),
        }
    }

    /// Build from waypoints, tagging every leg with `kind`.
    pub fn from_points(dim: usize, points: Vec<Point>, kind: LegKind) -> Self {
        let mut s = SkeletonPath::new(dim, points[0]);
        for p in points.into_iter().skip(1) {
            s.push(p, kind);
        }
        s
    }

    pub fn push(&mut self, p: Point, kind: LegKind) {
        let last = *self.waypoints.last().expect("skeleton has a start");
        self.legs.push(Leg {
            kind,
            length: dist(last, p),
            good: None,
            error: None,
        });
        self.waypoints.push(p);
    }

    pub fn start(&self) -> Point {
        self.waypoints[0]
    }

    pub fn end(&self) -> Point {
        *self.waypoints.last().expect("skeleton has a start")
    }

    /// Number of increments.
    pub fn steps(&self) -> usize {
        self.legs.len()
    }

    pub fn max_step(&self) -> f64 {
        self.legs.iter().map(|l| l.length).fold(0.0, f64::max)
    }

    /// Whether any detour component id appears twice.
    pub fn revisits_detour(&self) -> bool {
        let mut seen = self.detours.clone();
        seen.sort_unstable();
        seen.windows(2).any(|w| w[0] == w[1])
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let names = ["x", "y", "z"];
        writeln!(w, "index,{},kind,length,good,error", names[..self.dim].join(","))?;
        for (i, p) in self.waypoints.iter().enumerate() {
            let coords: Vec<String> = p[..self.dim].iter().map(|c| format!("{c}")).collect();
            let (kind, len, good, err) = match i.checked_sub(1).map(|j| &self.legs[j]) {
                None => ("start".to_string(), String::new(), String::new(), String::new()),
                Some(l) => (
                    l.kind.name().to_string(),
                    format!("{}", l.length),
                    l.good.map(|g| g.to_string()).unwrap_or_default(),
                    l.error.map(|e| e.to_string()).unwrap_or_default(),
                ),
            };
            writeln!(w, "{i},{},{kind},{len},{good},{err}", coords.join(","))?;
        }
        Ok(())
    }
}
