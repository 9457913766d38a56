"""Region-based polyp detection toolkit.

Modules: ``geometry`` (boxes, masks, IoU), ``augmentation``, ``proposal``
(anchors, labels, NMS, crop-and-resize), ``detector`` (exemplar reference
detector), ``evaluation`` (still and video metrics), ``post_learning``
(false-positive and offline learning), plus dataset/record I/O and the CLI.
"""

__version__ = "0.1.0"
