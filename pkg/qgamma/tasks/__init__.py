# Task wrappers and the ordered worker pool
