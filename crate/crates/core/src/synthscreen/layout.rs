use crate::label::VitalLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotContent {
    Single(VitalLabel),
    /// "SYS/DIA" drawn as one readout.
    BloodPressure,
}

/// A value position on the canonical screen. `capacity` is the widest text
/// the slot accepts, written with the widest glyphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub content: SlotContent,
    pub x: u32,
    pub y: u32,
    pub cell: u32,
    pub capacity: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub name: &'static str,
    pub slots: &'static [Slot],
}

impl Layout {
    pub fn labels(&self) -> impl Iterator<Item = VitalLabel> + '_ {
        self.slots.iter().flat_map(|s| match s.content {
            SlotContent::Single(l) => vec![l],
            SlotContent::BloodPressure => vec![VitalLabel::Sys, VitalLabel::Dia],
        })
    }
}

const fn slot(label: VitalLabel, x: u32, y: u32, cell: u32, capacity: &'static str) -> Slot {
    Slot {
        content: SlotContent::Single(label),
        x,
        y,
        cell,
        capacity,
    }
}

use VitalLabel::*;

pub const LAYOUTS: [Layout; 3] = [
    Layout {
        name: "two-column",
        slots: &[
            slot(Hr, 40, 40, 8, "888"),
            slot(Spo2, 40, 150, 8, "888"),
            slot(Pr, 40, 260, 6, "888"),
            slot(Rr, 40, 350, 6, "88"),
            slot(Sys, 330, 40, 7, "888"),
            slot(Dia, 330, 130, 7, "888"),
            slot(Map, 330, 220, 6, "888"),
            slot(Temp, 330, 330, 6, "88.8"),
        ],
    },
    Layout {
        name: "top-strip",
        slots: &[
            slot(Hr, 30, 40, 7, "888"),
            slot(Pr, 230, 40, 7, "888"),
            slot(Spo2, 430, 40, 7, "888"),
            slot(Sys, 30, 200, 8, "888"),
            slot(Dia, 230, 200, 8, "888"),
            slot(Map, 430, 200, 6, "888"),
            slot(Rr, 30, 360, 6, "88"),
            slot(Temp, 230, 360, 7, "88.8"),
        ],
    },
    Layout {
        name: "composite-bp",
        slots: &[
            Slot {
                content: SlotContent::BloodPressure,
                x: 40,
                y: 60,
                cell: 7,
                capacity: "888/888",
            },
            slot(Map, 420, 60, 6, "888"),
            slot(Hr, 40, 200, 8, "888"),
            slot(Spo2, 250, 200, 8, "888"),
            slot(Pr, 460, 200, 6, "888"),
            slot(Rr, 40, 360, 6, "88"),
            slot(Temp, 250, 360, 6, "88.8"),
        ],
    },
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::GlyphAtlas;
    use crate::result::BoundingBox;

    // Space reserved around each slot for the crop margin and the label tag.
    const CLEARANCE: u32 = 16;

    fn reserved(atlas: &GlyphAtlas, s: &Slot) -> BoundingBox {
        let (w, h) = atlas.text_extent(s.capacity, s.cell).unwrap();
        BoundingBox::new(
            s.x - CLEARANCE,
            s.y - CLEARANCE,
            s.x + w + CLEARANCE,
            s.y + h + CLEARANCE,
        )
        .unwrap()
    }

    #[test]
    fn slots_fit_and_do_not_overlap() {
        let atlas = GlyphAtlas::builtin();
        for layout in &LAYOUTS {
            let boxes: Vec<_> = layout.slots.iter().map(|s| reserved(&atlas, s)).collect();
            for (i, a) in boxes.iter().enumerate() {
                assert!(
                    a.within(640, 480),
                    "{} slot {i} leaves the frame",
                    layout.name
                );
                for b in &boxes[i + 1..] {
                    assert!(a.intersection(b).is_none(), "{} slots overlap", layout.name);
                }
            }
        }
    }

    #[test]
    fn every_layout_covers_all_labels_once() {
        for layout in &LAYOUTS {
            let mut labels: Vec<_> = layout.labels().collect();
            labels.sort();
            assert_eq!(labels, VitalLabel::ALL.to_vec(), "{}", layout.name);
        }
    }
}
