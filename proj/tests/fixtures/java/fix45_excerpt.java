if (i == 0 && nums[i] == 5 || nums[i] == 5 && nums[i-1] != 4) {
    int fiveSpot = i;
    for (int m = i; m < nums.length; m++) {
        if (nums[m] == 4 && nums[m+1] != 5) {
            int otherNum = nums[m+1];
            nums[m+1] = 5;
            nums[fiveSpot] = otherNum;
            break;
        }}}
