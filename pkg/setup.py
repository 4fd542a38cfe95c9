# setup.py
from setuptools import setup, find_packages

# A list of dependencies for the project
install_deps = [
    "numpy",
    "scipy",
    "pandas",
    "joblib",
    "PyYAML",
    "pandera",
    "orjson",
    "omegaconf",
    "pydantic>=2",
    "matplotlib",
    "tqdm",
    "flake8",
    "mypy",
    "pandas-stubs",
    "types-PyYAML",
    "pytest",
    "black",
    "ruff",
    "pre-commit",
]

setup(
    name="markov_game_lab",
    version="0.1.0",
    description="Exact solvers, elimination learners and complexity calculators for zero-sum episodic Markov games.",
    long_description=open("README.md", encoding="utf-8").read(),
    long_description_content_type="text/markdown",
    package_dir={"": "src"},
    packages=find_packages(where="src"),
    python_requires=">=3.10",
    install_requires=install_deps,
    entry_points={"console_scripts": ["markov-game-lab=main:main"]},
    classifiers=[
        "Programming Language :: Python :: 3.11",
        "Operating System :: OS Independent",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
)
