"""evalsynth: synthesise task-specific evaluators for foundation-model tasks.

Given a task description and a sample input, the library drafts a task
descriptor, walks a reviewer through a staged validation protocol, compiles
the validated descriptor into an executable eval plan (checks, a review UI
layout and label channels), runs the plan over examples, and records human
feedback as labeled data.
"""

__version__ = "0.1.0"
