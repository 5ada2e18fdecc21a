from setuptools import setup, find_packages

setup(
    name="roughfilter",
    version="0.1.0",
    description="Hurst exponent estimation and noise filtering for volatility proxies",
    author="roughfilter developers",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.9.0",
        "pandas>=1.5",
        "pydantic==2.5.3",
        "pydantic-settings==2.1.0",
        "python-dotenv>=1.0.0",
        "tomli>=2.0; python_version<'3.11'",
    ],
    entry_points={
        "console_scripts": [
            "roughfilter=roughfilter.__main__:main",
        ],
    },
)
