use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layout::{SlotContent, LAYOUTS};
use super::SynthError;
use crate::backends::GlyphAtlas;
use crate::geometry::CanonicalFrame;
use crate::image::ImageBuffer;
use crate::label::VitalLabel;
use crate::result::BoundingBox;

/// What to draw on the canonical screen. Labels missing from `values` are
/// left blank.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenSpec {
    pub layout: usize,
    pub values: BTreeMap<VitalLabel, String>,
    /// Varies background tint and decorations.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedField {
    pub label: VitalLabel,
    pub value: String,
    pub text: String,
    pub bbox: BoundingBox,
}

pub fn label_color(label: VitalLabel) -> [u8; 3] {
    match label {
        VitalLabel::Hr | VitalLabel::Pr => [60, 235, 90],
        VitalLabel::Spo2 => [40, 210, 250],
        VitalLabel::Sys | VitalLabel::Dia | VitalLabel::Map => [250, 90, 90],
        VitalLabel::Rr => [250, 230, 60],
        VitalLabel::Temp => [235, 235, 235],
    }
}

fn fill_rect(img: &mut ImageBuffer, x0: u32, y0: u32, x1: u32, y1: u32, rgb: [u8; 3]) {
    for y in y0..y1.min(img.height()) {
        for x in x0..x1.min(img.width()) {
            img.put_pixel(x, y, rgb);
        }
    }
}

/// Draws the screen content on a canonical 640x480 canvas. Returned fields
/// follow label order; the composite blood-pressure readout yields one field
/// for SYS and one for DIA sharing the same box.
pub fn render(
    spec: &ScreenSpec,
    atlas: &GlyphAtlas,
) -> Result<(ImageBuffer, Vec<RenderedField>), SynthError> {
    let layout = LAYOUTS
        .get(spec.layout)
        .ok_or(SynthError::UnknownLayout(spec.layout))?;
    for (label, v) in &spec.values {
        if !atlas.supports(v) || v.is_empty() {
            return Err(SynthError::Unrenderable {
                label: *label,
                value: v.clone(),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let frame = CanonicalFrame::STANDARD;
    let base = rng.random_range(6u8..=22);
    let bg = [
        base,
        base + rng.random_range(0..6),
        base + rng.random_range(2..10),
    ];
    let mut img = ImageBuffer::filled(frame.width, frame.height, bg);

    // Panel separators, kept clear of every slot.
    let line = [bg[0] + 30, bg[1] + 30, bg[2] + 30];
    fill_rect(&mut img, 0, 0, frame.width, 3, line);
    fill_rect(
        &mut img,
        0,
        frame.height - 3,
        frame.width,
        frame.height,
        line,
    );

    let mut fields = Vec::new();
    for s in layout.slots {
        let (labels, text) = match s.content {
            SlotContent::Single(l) => match spec.values.get(&l) {
                Some(v) => (vec![l], v.clone()),
                None => continue,
            },
            SlotContent::BloodPressure => {
                match (
                    spec.values.get(&VitalLabel::Sys),
                    spec.values.get(&VitalLabel::Dia),
                ) {
                    (Some(sys), Some(dia)) => (
                        vec![VitalLabel::Sys, VitalLabel::Dia],
                        format!("{sys}/{dia}"),
                    ),
                    (None, None) => continue,
                    _ => {
                        return Err(SynthError::Unrenderable {
                            label: VitalLabel::Sys,
                            value: "composite readout needs both SYS and DIA".into(),
                        })
                    }
                }
            }
        };
        let (cap_w, _) = atlas
            .text_extent(s.capacity, s.cell)
            .expect("slot capacity uses atlas glyphs");
        let (w, _) = atlas.text_extent(&text, s.cell).expect("checked above");
        if w > cap_w {
            return Err(SynthError::LayoutOverflow {
                label: labels[0],
                text,
                width: w,
                capacity: cap_w,
            });
        }
        let color = label_color(labels[0]);
        // Label tag above the readout.
        let tag = [color[0] / 2, color[1] / 2, color[2] / 2];
        fill_rect(
            &mut img,
            s.x,
            s.y - 12,
            s.x + 24 + rng.random_range(0..16),
            s.y - 8,
            tag,
        );
        let bbox = atlas
            .draw_text(&mut img, s.x, s.y, s.cell, &text, color)
            .expect("checked above");
        for l in labels {
            let value = spec.values[&l].clone();
            fields.push(RenderedField {
                label: l,
                value,
                text: text.clone(),
                bbox,
            });
        }
    }
    fields.sort_by_key(|f| f.label);
    Ok((img, fields))
}
