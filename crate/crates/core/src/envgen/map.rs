use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use super::EnvError;

/// Node identifier. Pose nodes occupy `0..n_poses`, landmarks follow.
pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RoomType {
    Kitchen,
    Bedroom,
    LivingRoom,
    Office,
}

impl RoomType {
    pub const ALL: [RoomType; 4] = [
        RoomType::Kitchen,
        RoomType::Bedroom,
        RoomType::LivingRoom,
        RoomType::Office,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RoomType::Kitchen => "kitchen",
            RoomType::Bedroom => "bedroom",
            RoomType::LivingRoom => "living-room",
            RoomType::Office => "office",
        }
    }

    /// Map classes that may be placed at a pose of this room type.
    pub fn landmark_classes(self) -> &'static [&'static str] {
        match self {
            RoomType::Bedroom => &["bed", "bedside", "wardrobe", "cabinet", "chair"],
            RoomType::Kitchen => &[
                "kitchen-table",
                "fridge",
                "microwave",
                "drawers",
                "oven",
                "cabinet",
                "chair",
                "benchtop",
            ],
            RoomType::LivingRoom => &["sofa", "armchair", "tv", "dining-table"],
            RoomType::Office => &["desk", "shelf", "chair"],
        }
    }
}

impl fmt::Display for RoomType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RoomType {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RoomType::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| EnvError::Parse {
                line: 0,
                reason: format!("unknown room type `{s}`"),
            })
    }
}

/// A semantic graph map: a pose backbone plus landmark nodes attached to
/// the poses they are visible from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphMap {
    rooms: Vec<RoomType>,
    landmark_classes: Vec<String>,
    edges: Vec<(NodeId, NodeId)>,
    neighbors: Vec<Vec<NodeId>>,
}

impl GraphMap {
    /// Builds a map from its parts. Edges are stored undirected with the
    /// smaller id first; duplicates are merged. Fails on self-loops and
    /// out-of-range ids only; see [`GraphMap::check`] for the full
    /// structural invariants.
    pub fn new(
        rooms: Vec<RoomType>,
        landmark_classes: Vec<String>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, EnvError> {
        let n = rooms.len() + landmark_classes.len();
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(EnvError::Invalid(format!("edge ({a}, {b}) references a missing node")));
            }
            if a == b {
                return Err(EnvError::Invalid(format!("self-loop on node {a}")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in &edges {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        neighbors.iter_mut().for_each(|v| v.sort_unstable());
        Ok(Self {
            rooms,
            landmark_classes: landmark_classes.into_iter().map(|c| c.to_lowercase()).collect(),
            edges,
            neighbors,
        })
    }

    pub fn n_poses(&self) -> usize {
        self.rooms.len()
    }

    pub fn n_landmarks(&self) -> usize {
        self.landmark_classes.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.rooms.len() + self.landmark_classes.len()
    }

    pub fn is_pose(&self, id: NodeId) -> bool {
        id < self.rooms.len()
    }

    pub fn is_landmark(&self, id: NodeId) -> bool {
        id >= self.rooms.len() && id < self.n_nodes()
    }

    pub fn rooms(&self) -> &[RoomType] {
        &self.rooms
    }

    pub fn room(&self, pose: NodeId) -> RoomType {
        self.rooms[pose]
    }

    pub fn pose_ids(&self) -> std::ops::Range<NodeId> {
        0..self.rooms.len()
    }

    pub fn landmark_ids(&self) -> std::ops::Range<NodeId> {
        self.rooms.len()..self.n_nodes()
    }

    /// Class of a landmark node, `None` for poses and unknown ids.
    pub fn landmark_class(&self, id: NodeId) -> Option<&str> {
        id.checked_sub(self.rooms.len())
            .and_then(|j| self.landmark_classes.get(j))
            .map(String::as_str)
    }

    /// `(landmark id, class)` for every landmark, in id order.
    pub fn landmarks(&self) -> impl Iterator<Item = (NodeId, &str)> {
        let offset = self.rooms.len();
        self.landmark_classes
            .iter()
            .enumerate()
            .map(move |(j, c)| (offset + j, c.as_str()))
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.neighbors[id]
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.neighbors[id].len()
    }

    /// Structural invariants of a generated map:
    /// the pose path `(i, i+1)` is present, every landmark has at least one
    /// edge, landmark edges only go to poses, and all poses that see one
    /// landmark share a room type.
    pub fn check(&self) -> Result<(), EnvError> {
        let n_poses = self.n_poses();
        for i in 1..n_poses {
            if self.edges.binary_search(&(i - 1, i)).is_err() {
                return Err(EnvError::Invalid(format!("pose path broken between {} and {i}", i - 1)));
            }
        }
        for (id, class) in self.landmarks() {
            let ns = self.neighbors(id);
            if ns.is_empty() {
                return Err(EnvError::Invalid(format!("landmark {id} ({class}) has no edges")));
            }
            if let Some(&bad) = ns.iter().find(|&&j| !self.is_pose(j)) {
                return Err(EnvError::Invalid(format!("landmark {id} is linked to landmark {bad}")));
            }
            let room = self.rooms[ns[0]];
            if ns.iter().any(|&p| self.rooms[p] != room) {
                return Err(EnvError::Invalid(format!("landmark {id} is visible from several room types")));
            }
        }
        Ok(())
    }

    /// [`GraphMap::check`] plus: every landmark class belongs to the class
    /// set of its room, and the landmark count lies in `objects`.
    pub fn check_generated(&self, objects: (usize, usize)) -> Result<(), EnvError> {
        self.check()?;
        let m = self.n_landmarks();
        if m < objects.0 || m > objects.1 {
            return Err(EnvError::Invalid(format!(
                "{m} landmarks outside [{}, {}]",
                objects.0, objects.1
            )));
        }
        for (id, class) in self.landmarks() {
            let room = self.rooms[self.neighbors(id)[0]];
            if !room.landmark_classes().contains(&class) {
                return Err(EnvError::Invalid(format!("landmark {id}: `{class}` cannot appear in a {room}")));
            }
        }
        Ok(())
    }

    /// Line-oriented text form:
    /// `poses N landmarks M`, then `pose <id> <room>`, `landmark <id> <class>`
    /// and `edge <id> <id>` lines.
    pub fn to_text(&self) -> String {
        let mut out = format!("poses {} landmarks {}\n", self.n_poses(), self.n_landmarks());
        for (i, r) in self.rooms.iter().enumerate() {
            out.push_str(&format!("pose {i} {r}\n"));
        }
        for (id, c) in self.landmarks() {
            out.push_str(&format!("landmark {id} {c}\n"));
        }
        for (a, b) in &self.edges {
            out.push_str(&format!("edge {a} {b}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, EnvError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let parse_err = |line: usize, reason: String| EnvError::Parse { line, reason };
        let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "empty map file".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        let (n_poses, n_landmarks) = match h.as_slice() {
            ["poses", n, "landmarks", m] => (
                n.parse::<usize>().map_err(|e| parse_err(hl, e.to_string()))?,
                m.parse::<usize>().map_err(|e| parse_err(hl, e.to_string()))?,
            ),
            _ => return Err(parse_err(hl, format!("bad header `{header}`"))),
        };
        let mut rooms: Vec<Option<RoomType>> = vec![None; n_poses];
        let mut classes: Vec<Option<String>> = vec![None; n_landmarks];
        let mut edges = Vec::new();
        for (ln, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            let id = |s: &str| s.parse::<usize>().map_err(|e| parse_err(ln, e.to_string()));
            match f.as_slice() {
                ["pose", i, room] => {
                    let i = id(i)?;
                    let slot = rooms
                        .get_mut(i)
                        .ok_or_else(|| parse_err(ln, format!("pose id {i} out of range")))?;
                    *slot = Some(room.parse().map_err(|_| parse_err(ln, format!("unknown room `{room}`")))?);
                }
                ["landmark", i, class] => {
                    let i = id(i)?;
                    let slot = i
                        .checked_sub(n_poses)
                        .and_then(|j| classes.get_mut(j))
                        .ok_or_else(|| parse_err(ln, format!("landmark id {i} out of range")))?;
                    *slot = Some(class.to_string());
                }
                ["edge", a, b] => edges.push((id(a)?, id(b)?)),
                _ => return Err(parse_err(ln, format!("unrecognised line `{line}`"))),
            }
        }
        let rooms = rooms
            .into_iter()
            .enumerate()
            .map(|(i, r)| r.ok_or_else(|| parse_err(0, format!("pose {i} missing"))))
            .collect::<Result<Vec<_>, _>>()?;
        let classes = classes
            .into_iter()
            .enumerate()
            .map(|(j, c)| c.ok_or_else(|| parse_err(0, format!("landmark {} missing", n_poses + j))))
            .collect::<Result<Vec<_>, _>>()?;
        GraphMap::new(rooms, classes, edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GraphMap {
        GraphMap::new(
            vec![RoomType::Kitchen, RoomType::Kitchen, RoomType::Office],
            vec!["fridge".into(), "desk".into()],
            [(0, 1), (1, 2), (3, 0), (3, 1), (4, 2)],
        )
        .unwrap()
    }

    #[test]
    fn accessors() {
        let m = small();
        assert_eq!(m.n_nodes(), 5);
        assert!(m.is_pose(2) && m.is_landmark(3) && !m.is_landmark(5));
        assert_eq!(m.landmark_class(3), Some("fridge"));
        assert_eq!(m.landmark_class(1), None);
        assert_eq!(m.neighbors(1), &[0, 2, 3]);
        assert_eq!(m.edges()[0], (0, 1));
        m.check().unwrap();
    }

    #[test]
    fn text_round_trip() {
        let m = small();
        let text = m.to_text();
        assert!(text.starts_with("poses 3 landmarks 2\npose 0 kitchen\n"));
        let back = GraphMap::from_text(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn check_rejects_broken_maps() {
        let no_path = GraphMap::new(vec![RoomType::Office; 3], vec![], [(0, 1)]).unwrap();
        assert!(no_path.check().is_err());
        let landmark_pair = GraphMap::new(
            vec![RoomType::Office],
            vec!["desk".into(), "shelf".into()],
            [(0, 1), (1, 2)],
        )
        .unwrap();
        assert!(landmark_pair.check().is_err());
        let orphan = GraphMap::new(vec![RoomType::Office], vec!["desk".into()], []).unwrap();
        assert!(orphan.check().is_err());
        let two_rooms = GraphMap::new(
            vec![RoomType::Office, RoomType::Kitchen],
            vec!["chair".into()],
            [(0, 1), (2, 0), (2, 1)],
        )
        .unwrap();
        assert!(two_rooms.check().is_err());
        let wrong_room = GraphMap::new(vec![RoomType::Office], vec!["fridge".into()], [(0, 1)]).unwrap();
        assert!(wrong_room.check().is_ok());
        assert!(wrong_room.check_generated((1, 1)).is_err());
    }

    #[test]
    fn parse_errors() {
        assert!(GraphMap::from_text("").is_err());
        assert!(GraphMap::from_text("poses 1 landmarks 0\npose 0 garage\n").is_err());
        assert!(GraphMap::from_text("poses 1 landmarks 0\n").is_err());
        assert!(GraphMap::from_text("poses 1 landmarks 0\npose 0 office\nedge 0 0\n").is_err());
    }
}
