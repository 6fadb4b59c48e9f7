"""Fine-grained dog breed classification pipeline.

Bounding-box-seeded GrabCut segmentation, geometric head detection,
multi-feature bag-of-words encoding with spatial pyramids, chi-square
approximating kernel maps, one-vs-all linear SVM and VOC-style evaluation.
"""

__version__ = "0.1.0"
