use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::image::ImageBuffer;
use crate::result::BoundingBox;

/// Horizontal space between rendered glyphs, in font cells.
pub const GLYPH_GAP_CELLS: u32 = 2;

/// Cell size of the built-in dot-matrix font: every font dot is a
/// `BUILTIN_CELL x BUILTIN_CELL` block, so glyphs are 7 cells tall.
pub const BUILTIN_CELL: u32 = 6;

const FONT: [(char, &[&str; 7]); 12] = [
    (
        '0',
        &[
            ".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###.",
        ],
    ),
    (
        '1',
        &[
            "..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###.",
        ],
    ),
    (
        '2',
        &[
            ".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####",
        ],
    ),
    (
        '3',
        &[
            "#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###.",
        ],
    ),
    (
        '4',
        &[
            "...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#.",
        ],
    ),
    (
        '5',
        &[
            "#####", "#....", "####.", "....#", "....#", "#...#", ".###.",
        ],
    ),
    (
        '6',
        &[
            "..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###.",
        ],
    ),
    (
        '7',
        &[
            "#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#...",
        ],
    ),
    (
        '8',
        &[
            ".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###.",
        ],
    ),
    (
        '9',
        &[
            ".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##..",
        ],
    ),
    (
        '/',
        &[
            "....#", "....#", "...#.", "..#..", ".#...", "#....", "#....",
        ],
    ),
    ('.', &["..", "..", "..", "..", "..", "##", "##"]),
];

#[derive(Debug, Error)]
pub enum AtlasError {
    #[error("cannot read atlas {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("bad glyph file {}: {message}", path.display())]
    BadGlyph { path: PathBuf, message: String },
    #[error("glyph heights differ: {0} vs {1}")]
    HeightMismatch(u32, u32),
    #[error("duplicate glyph {0:?}")]
    Duplicate(char),
    #[error("atlas has no glyphs")]
    Empty,
}

/// Grayscale glyph bitmap; 255 is ink, 0 is background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub ch: char,
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl Template {
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[(y * self.width + x) as usize]
    }
}

/// Character templates shared by the renderer and the reference OCR.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlyphAtlas {
    height: u32,
    glyphs: BTreeMap<char, Template>,
}

impl GlyphAtlas {
    pub fn from_templates(templates: Vec<Template>) -> Result<Self, AtlasError> {
        let height = templates.first().ok_or(AtlasError::Empty)?.height;
        let mut glyphs = BTreeMap::new();
        for t in templates {
            if t.height != height {
                return Err(AtlasError::HeightMismatch(height, t.height));
            }
            let ch = t.ch;
            if glyphs.insert(ch, t).is_some() {
                return Err(AtlasError::Duplicate(ch));
            }
        }
        Ok(Self { height, glyphs })
    }

    /// The embedded 5x7 dot-matrix font for `0-9 . /` at 42 px height.
    pub fn builtin() -> Self {
        let c = BUILTIN_CELL;
        let templates = FONT
            .iter()
            .map(|(ch, rows)| {
                let cols = rows[0].len() as u32;
                let (width, height) = (cols * c, 7 * c);
                let mut data = vec![0u8; (width * height) as usize];
                for y in 0..height {
                    let row = rows[(y / c) as usize].as_bytes();
                    for x in 0..width {
                        if row[(x / c) as usize] == b'#' {
                            data[(y * width + x) as usize] = 255;
                        }
                    }
                }
                Template {
                    ch: *ch,
                    width,
                    height,
                    data,
                }
            })
            .collect();
        Self::from_templates(templates).expect("built-in font is consistent")
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn glyph(&self, ch: char) -> Option<&Template> {
        self.glyphs.get(&ch)
    }

    pub fn templates(&self) -> impl Iterator<Item = &Template> {
        self.glyphs.values()
    }

    pub fn supports(&self, text: &str) -> bool {
        text.chars().all(|c| self.glyphs.contains_key(&c))
    }

    fn scaled_width(&self, t: &Template, cell: u32) -> u32 {
        ((t.width as f64 * 7.0 * cell as f64 / self.height as f64).round() as u32).max(1)
    }

    /// Size of `text` rendered with font cells of `cell` px (glyphs are
    /// `7 * cell` px tall). `None` if a character has no template.
    pub fn text_extent(&self, text: &str, cell: u32) -> Option<(u32, u32)> {
        let mut width = 0;
        for (i, ch) in text.chars().enumerate() {
            let t = self.glyph(ch)?;
            if i > 0 {
                width += GLYPH_GAP_CELLS * cell;
            }
            width += self.scaled_width(t, cell);
        }
        (width > 0).then_some((width, 7 * cell))
    }

    /// Draws `text` with its top-left corner at `(x, y)` and returns the
    /// covered box. Glyphs are scaled from the templates by nearest
    /// neighbour; pixels outside the image are skipped.
    pub fn draw_text(
        &self,
        img: &mut ImageBuffer,
        x: u32,
        y: u32,
        cell: u32,
        text: &str,
        color: [u8; 3],
    ) -> Option<BoundingBox> {
        let (w, h) = self.text_extent(text, cell)?;
        let mut pen = x;
        for ch in text.chars() {
            let t = self.glyph(ch)?;
            let gw = self.scaled_width(t, cell);
            for gy in 0..h {
                let ty = gy * t.height / h;
                for gx in 0..gw {
                    let (px, py) = (pen + gx, y + gy);
                    if px < img.width() && py < img.height() && t.get(gx * t.width / gw, ty) > 127 {
                        img.put_pixel(px, py, color);
                    }
                }
            }
            pen += gw + GLYPH_GAP_CELLS * cell;
        }
        BoundingBox::new(x, y, x + w, y + h).ok()
    }

    /// Loads `XXXX.png` files, `XXXX` being the hexadecimal codepoint.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, AtlasError> {
        let dir = dir.as_ref();
        let io = |source| AtlasError::Io {
            path: dir.to_path_buf(),
            source,
        };
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(io)?
            .collect::<Result<Vec<_>, _>>()
            .map_err(io)?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
            .collect();
        paths.sort();
        let mut templates = Vec::with_capacity(paths.len());
        for path in paths {
            let bad = |message: String| AtlasError::BadGlyph {
                path: path.clone(),
                message,
            };
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default();
            let ch = u32::from_str_radix(stem, 16)
                .ok()
                .and_then(char::from_u32)
                .ok_or_else(|| bad("file name is not a hexadecimal codepoint".into()))?;
            let img = image::open(&path)
                .map_err(|e| bad(e.to_string()))?
                .into_luma8();
            templates.push(Template {
                ch,
                width: img.width(),
                height: img.height(),
                data: img.into_raw(),
            });
        }
        Self::from_templates(templates)
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), AtlasError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|source| AtlasError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        for t in self.glyphs.values() {
            let path = dir.join(format!("{:04X}.png", t.ch as u32));
            let img = image::GrayImage::from_raw(t.width, t.height, t.data.clone())
                .expect("template buffer matches its size");
            img.save(&path).map_err(|e| AtlasError::BadGlyph {
                path: path.clone(),
                message: e.to_string(),
            })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_shape() {
        let a = GlyphAtlas::builtin();
        assert_eq!(a.height(), 42);
        assert_eq!(a.templates().count(), 12);
        assert_eq!(a.glyph('8').unwrap().width, 30);
        assert_eq!(a.glyph('.').unwrap().width, 12);
        assert!(a.supports("120/80") && a.supports("37.2"));
        assert!(!a.supports("S8"));
    }

    #[test]
    fn text_layout() {
        let a = GlyphAtlas::builtin();
        assert_eq!(a.text_extent("98", 6), Some((30 + 12 + 30, 42)));
        assert_eq!(a.text_extent("37.2", 8), Some((3 * 40 + 16 + 3 * 16, 56)));
        assert_eq!(a.text_extent("", 6), None);
        assert_eq!(a.text_extent("9x", 6), None);
        let mut img = ImageBuffer::black(100, 60);
        let b = a.draw_text(&mut img, 5, 6, 6, "1", [200, 0, 0]).unwrap();
        assert_eq!(b.to_array(), [5, 6, 35, 48]);
        // top dot of '1' sits in font column 2
        assert_eq!(img.pixel(5 + 12, 6), [200, 0, 0]);
        assert_eq!(img.pixel(5, 6), [0, 0, 0]);
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let a = GlyphAtlas::builtin();
        a.save(dir.path()).unwrap();
        assert!(dir.path().join("0030.png").exists());
        assert!(dir.path().join("002F.png").exists());
        assert_eq!(GlyphAtlas::load(dir.path()).unwrap(), a);
    }

    #[test]
    fn rejects_inconsistent_templates() {
        let t = |ch, h| Template {
            ch,
            width: 1,
            height: h,
            data: vec![0; h as usize],
        };
        assert!(matches!(
            GlyphAtlas::from_templates(vec![t('1', 4), t('2', 5)]),
            Err(AtlasError::HeightMismatch(4, 5))
        ));
        assert!(matches!(
            GlyphAtlas::from_templates(vec![t('1', 4), t('1', 4)]),
            Err(AtlasError::Duplicate('1'))
        ));
        assert!(matches!(
            GlyphAtlas::from_templates(vec![]),
            Err(AtlasError::Empty)
        ));
    }
}
