"""Instance-segmentation benchmark tooling.

Subpackages and modules:

- ``maskbench.masks``: RLE codec, rasterization, IoU and box geometry
  (compiled kernels with a pure-numpy fallback)
- ``maskbench.coco``: dataset/results parsing, validation, bbox repair
- ``maskbench.evaluation``: AP/AR scoring at a fixed IoU threshold
- ``maskbench.fusion``: multi-source detection merging and post-filters
- ``maskbench.stats``: class counts, co-occurrence, histograms
- ``maskbench.service``: HTTP submission scoring with a persistent log
- ``maskbench.cli``: command-line front end
"""

__version__ = "0.1.0"
