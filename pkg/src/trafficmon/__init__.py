"""Traffic monitoring pipeline: deterministic scene simulator, top-down
camera rasterizer, instance-mask highlighting, alias-grounded captioning,
a multimodal-LLM gateway and an accuracy evaluation harness."""

__version__ = "0.1.0"
