from setuptools import setup

setup(
    name="imc-pack",
    version="0.1.0",
    packages=["imc_pack", "imc_pack.handlers"],
    package_dir={"imc_pack": "."},
    package_data={"imc_pack": ["data/*/*.json"]},
    install_requires=[
        "typer>=0.9.0",
        "rich>=13.0.0",
        "python-dotenv",
        "rectpack>=0.2.2",
        "numpy>=1.21",
        "pandas>=1.3",
    ],
    extras_require={
        "test": ["pytest>=7.0"],
    },
    entry_points={
        "console_scripts": [
            "imc-pack=imc_pack.__main__:app",
        ],
    },
    python_requires=">=3.8",
)
