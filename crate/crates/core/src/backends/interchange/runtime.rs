use std::path::Path;

use tract_onnx::prelude::*;

use super::decode::{
    ctc_greedy, decode_detections, decode_segmentation, letterbox, parse_dictionary,
    recognizer_input,
};
use crate::backends::{
    BackendError, DetectionBackend, DetectionSection, OcrBackend, OcrSection, SegmentationBackend,
    SegmentationSection, Stage,
};
use crate::image::{BinaryMask, ImageBuffer};
use crate::label::VitalLabel;
use crate::result::Detection;

type Plan = Arc<TypedRunnableModel>;

fn load_plan(path: &Path, shape: [usize; 4], stage: Stage) -> Result<Plan, BackendError> {
    let err = |e: TractError| BackendError::inference(stage, format!("{}: {e}", path.display()));
    tract_onnx::onnx()
        .model_for_path(path)
        .map_err(err)?
        .with_input_fact(0, f32::fact(shape).into())
        .map_err(err)?
        .into_optimized()
        .map_err(err)?
        .into_runnable()
        .map_err(err)
}

// Shape and flattened data of one model output.
type Output = (Vec<usize>, Vec<f32>);

fn run(
    plan: &Plan,
    shape: [usize; 4],
    data: &[f32],
    stage: Stage,
) -> Result<Vec<Output>, BackendError> {
    let err = |e: TractError| BackendError::inference(stage, e);
    let input = Tensor::from_shape(&shape, data).map_err(err)?;
    let outputs = plan.run(tvec!(input.into())).map_err(err)?;
    outputs
        .iter()
        .map(|t| {
            let view = t.to_plain_array_view::<f32>().map_err(err)?;
            Ok((view.shape().to_vec(), view.iter().copied().collect()))
        })
        .collect()
}

fn shape_error(stage: Stage, what: &str, shape: &[usize]) -> BackendError {
    BackendError::inference(stage, format!("unexpected {what} shape {shape:?}"))
}

pub struct OnnxSegmentation {
    plan: Plan,
    size: u32,
}

impl OnnxSegmentation {
    pub fn load(section: &SegmentationSection) -> Result<Self, BackendError> {
        let s = section.input_size as usize;
        Ok(Self {
            plan: load_plan(&section.model, [1, 3, s, s], Stage::Segmentation)?,
            size: section.input_size,
        })
    }
}

impl SegmentationBackend for OnnxSegmentation {
    fn segment(
        &mut self,
        img: &ImageBuffer,
        tau: f64,
    ) -> Result<Option<(BinaryMask, f64)>, BackendError> {
        let stage = Stage::Segmentation;
        let (input, lb) = letterbox(img, self.size);
        let s = self.size as usize;
        let outputs = run(&self.plan, [1, 3, s, s], &input, stage)?;
        let head = outputs
            .iter()
            .find(|(sh, _)| sh.len() == 3)
            .ok_or_else(|| BackendError::inference(stage, "no rank-3 head output"))?;
        let protos = outputs
            .iter()
            .find(|(sh, _)| sh.len() == 4)
            .ok_or_else(|| BackendError::inference(stage, "no rank-4 prototype output"))?;
        let (m, ph, pw) = (protos.0[1], protos.0[2], protos.0[3]);
        if head.0[1] != 5 + m {
            return Err(shape_error(stage, "head", &head.0));
        }
        Ok(decode_segmentation(
            &head.1,
            head.0[2],
            &protos.1,
            (m, ph, pw),
            tau,
            &lb,
            img.width(),
            img.height(),
        ))
    }
}

pub struct OnnxDetection {
    plan: Plan,
    size: u32,
    classes: Vec<VitalLabel>,
}

impl OnnxDetection {
    pub fn load(section: &DetectionSection) -> Result<Self, BackendError> {
        let s = section.input_size as usize;
        Ok(Self {
            plan: load_plan(&section.model, [1, 3, s, s], Stage::Detection)?,
            size: section.input_size,
            classes: section.classes.clone(),
        })
    }
}

impl DetectionBackend for OnnxDetection {
    fn detect(&mut self, img: &ImageBuffer, tau: f64) -> Result<Vec<Detection>, BackendError> {
        let stage = Stage::Detection;
        let (input, lb) = letterbox(img, self.size);
        let s = self.size as usize;
        let outputs = run(&self.plan, [1, 3, s, s], &input, stage)?;
        let (shape, data) = outputs
            .first()
            .ok_or_else(|| BackendError::inference(stage, "no output"))?;
        if shape.len() != 3 || shape[0] != 1 || shape[1] != 4 + self.classes.len() {
            return Err(shape_error(stage, "output", shape));
        }
        Ok(decode_detections(
            data,
            shape[2],
            &self.classes,
            tau,
            &lb,
            img.width(),
            img.height(),
        ))
    }
}

pub struct OnnxOcr {
    plan: Plan,
    height: u32,
    width: u32,
    dictionary: Vec<char>,
}

impl OnnxOcr {
    pub fn load(section: &OcrSection) -> Result<Self, BackendError> {
        let text =
            std::fs::read_to_string(&section.dictionary).map_err(|e| BackendError::ParseError {
                path: section.dictionary.display().to_string(),
                message: e.to_string(),
            })?;
        let (h, w) = (section.input_height as usize, section.input_width as usize);
        Ok(Self {
            plan: load_plan(&section.model, [1, 3, h, w], Stage::Recognition)?,
            height: section.input_height,
            width: section.input_width,
            dictionary: parse_dictionary(&text),
        })
    }
}

impl OcrBackend for OnnxOcr {
    fn recognize(&mut self, crop: &ImageBuffer) -> Result<Option<(String, f64)>, BackendError> {
        let stage = Stage::Recognition;
        let (h, w) = (self.height as usize, self.width as usize);
        let input = recognizer_input(crop, self.height, self.width);
        let outputs = run(&self.plan, [1, 3, h, w], &input, stage)?;
        let (shape, data) = outputs
            .first()
            .ok_or_else(|| BackendError::inference(stage, "no output"))?;
        if shape.len() != 3 || shape[0] != 1 || shape[2] != self.dictionary.len() + 1 {
            return Err(shape_error(stage, "output", shape));
        }
        Ok(ctc_greedy(data, shape[1], shape[2], &self.dictionary))
    }
}
