"""Writes the toy ONNX graphs used by the interchange tests.

Run from this directory: python3 generate.py
"""
import numpy as np
import onnx
from onnx import TensorProto, helper, numpy_helper

OPSET = [helper.make_opsetid("", 13)]


def save(name, nodes, inputs, outputs, inits):
    graph = helper.make_graph(nodes, name, inputs, outputs, inits)
    model = helper.make_model(graph, opset_imports=OPSET, producer_name="fixtures")
    model.ir_version = 8
    onnx.checker.check_model(model)
    onnx.save(model, f"{name}.onnx")


def image_input(h, w):
    return helper.make_tensor_value_info("images", TensorProto.FLOAT, [1, 3, h, w])


def constant_head(name, values):
    """`values + 0 * mean(images)`, so the output still depends on the input."""
    values = np.asarray(values, dtype=np.float32)
    nodes = [
        helper.make_node("ReduceMean", ["images"], ["mean"], axes=[1, 2, 3], keepdims=0),
        helper.make_node("Mul", ["mean", "zero"], ["nothing"]),
        helper.make_node("Add", ["table", "nothing"], [name]),
    ]
    inits = [
        numpy_helper.from_array(np.zeros(1, np.float32), "zero"),
        numpy_helper.from_array(values, "table"),
    ]
    out = helper.make_tensor_value_info(name, TensorProto.FLOAT, list(values.shape))
    return nodes, inits, out


# Segmentation, 32x32 input: one instance covering the whole input, one
# prototype equal to the channel mean minus 0.5, coefficient 20. Bright
# pixels become screen.
nodes, inits, head = constant_head("output0", [[[16.0], [16.0], [32.0], [32.0], [0.9], [20.0]]])
nodes += [
    helper.make_node("ReduceMean", ["images"], ["gray"], axes=[1], keepdims=1),
    helper.make_node("Sub", ["gray", "half"], ["output1"]),
]
inits.append(numpy_helper.from_array(np.array([0.5], np.float32), "half"))
protos = helper.make_tensor_value_info("output1", TensorProto.FLOAT, [1, 1, 32, 32])
save("seg", nodes, [image_input(32, 32)], [head, protos], inits)

# Detection, 32x32 input, 8 classes, 3 anchors. Class order in the manifest
# is reversed, so class 0 is TEMP and class 7 is HR.
det = np.zeros((1, 12, 3), np.float32)
det[0, 0:4, 0] = [8, 8, 8, 8]      # HR at 0.95
det[0, 4 + 7, 0] = 0.95
det[0, 0:4, 1] = [9, 8, 8, 8]      # overlapping HR at 0.9, suppressed
det[0, 4 + 7, 1] = 0.9
det[0, 0:4, 2] = [24, 24, 6, 4]    # TEMP at 0.5, below threshold
det[0, 4 + 0, 2] = 0.5
nodes, inits, out = constant_head("output0", det)
save("det", nodes, [image_input(32, 32)], [out], inits)

# Detection head with the wrong number of classes.
nodes, inits, out = constant_head("output0", np.zeros((1, 10, 2), np.float32))
save("det_bad", nodes, [image_input(32, 32)], [out], inits)

# Recognizer, 8x16 input, 4 steps over blank + "0123456789./".
# Steps read 9, 9, blank, 8 which decodes to "98".
rec = np.full((1, 4, 13), 0.01, np.float32)
for t, k in enumerate([10, 10, 0, 9]):
    rec[0, t, k] = 0.9
nodes, inits, out = constant_head("output0", rec)
save("rec", nodes, [image_input(8, 16)], [out], inits)

with open("dict.txt", "w") as f:
    f.write("\n".join("0123456789./") + "\n")
