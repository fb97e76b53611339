"""pramface: part-relation attention and component-adaptive triplet training
for matching faces across two imaging domains, built on a small CPU autodiff
engine with a procedural two-domain dataset generator for end-to-end runs."""

__version__ = "0.1.0"
