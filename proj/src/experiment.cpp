// filled in after the optimizer is validated
