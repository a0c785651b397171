"""stab_core — точное вычисление K-теоретических стабильных огибающих и узловых вырождений."""
