from .assoc_api import Method, TestResult, design_matrix, robkat_test, skat_test
